#pragma once

// Config files, CSV time series, legacy VTK snapshots and JSON reports.
//
// Config grammar: one `key = value` per line, `#` starts a comment, blank
// lines are ignored. Keys are listed in config_keys().

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mhdfvfe/config.hpp"
#include "mhdfvfe/diagnostics.hpp"
#include "mhdfvfe/errors.hpp"
#include "mhdfvfe/scheme.hpp"

namespace mhdfvfe::io {

/// Shortest representation that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "scheme", "case", "n", "c_dt", "T", "steps", "gamma", "a", "mu", "lambda", "eps", "bc",
      "picard_tol", "picard_max_iter", "picard_damping", "linear_tol", "output_dir", "snapshot_every",
      "strict", "p_monitor", "levels", "reference_factor"};
  return keys;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace detail

/// Applies one key/value pair to cfg.
inline void set_config_value(SchemeConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "scheme") {
    if (value == "I" || value == "1") cfg.scheme = SchemeKind::I;
    else if (value == "II" || value == "2") cfg.scheme = SchemeKind::II;
    else throw ConfigError("scheme must be I or II, got '" + value + "'");
  } else if (key == "case") {
    cfg.case_id = value;
  } else if (key == "n") {
    cfg.n = parse_int(key, value);
  } else if (key == "c_dt") {
    cfg.c_dt = parse_double(key, value);
  } else if (key == "T") {
    cfg.T = parse_double(key, value);
  } else if (key == "steps") {
    cfg.steps = parse_int(key, value);
  } else if (key == "gamma") {
    cfg.gamma = parse_double(key, value);
  } else if (key == "a") {
    cfg.a = parse_double(key, value);
  } else if (key == "mu") {
    cfg.mu = parse_double(key, value);
  } else if (key == "lambda") {
    cfg.lambda = parse_double(key, value);
  } else if (key == "eps") {
    cfg.eps = parse_double(key, value);
  } else if (key == "bc") {
    if (value == "periodic") cfg.bc = BoundaryKind::Periodic;
    else if (value == "no-slip" || value == "noslip") cfg.bc = BoundaryKind::NoSlip;
    else throw ConfigError("bc must be periodic or no-slip, got '" + value + "'");
  } else if (key == "picard_tol") {
    cfg.picard_tol = parse_double(key, value);
  } else if (key == "picard_max_iter") {
    cfg.picard_max_iter = parse_int(key, value);
  } else if (key == "picard_damping") {
    cfg.picard_damping = parse_double(key, value);
  } else if (key == "linear_tol") {
    cfg.linear_tol = parse_double(key, value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "snapshot_every") {
    cfg.snapshot_every = parse_int(key, value);
  } else if (key == "strict") {
    cfg.strict = parse_bool(key, value);
  } else if (key == "p_monitor") {
    cfg.p_monitor = parse_double(key, value);
  } else if (key == "levels") {
    cfg.levels.clear();
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) cfg.levels.push_back(parse_int(key, item));
    }
    if (cfg.levels.empty()) throw ConfigError("levels must list at least one mesh");
  } else if (key == "reference_factor") {
    cfg.reference_factor = parse_int(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline SchemeConfig parse_config(std::istream& in) {
  SchemeConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    set_config_value(cfg, key, value);
  }
  return cfg;
}

inline SchemeConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline SchemeConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

/// Every setting, in a fixed order, with derived values spelled out.
inline std::vector<std::pair<std::string, std::string>> normalized_config(const SchemeConfig& cfg) {
  std::string levels;
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) levels += (i ? "," : "") + std::to_string(cfg.levels[i]);
  const auto grid = time_grid(cfg);
  return {{"scheme", to_string(cfg.scheme)},
          {"case", cfg.case_id},
          {"n", std::to_string(cfg.n)},
          {"c_dt", format_number(cfg.c_dt)},
          {"T", format_number(grid.T)},
          {"steps", std::to_string(grid.steps)},
          {"dt", format_number(grid.dt)},
          {"h", format_number(mesh_size(cfg.n))},
          {"gamma", format_number(cfg.gamma)},
          {"a", format_number(cfg.a)},
          {"mu", format_number(cfg.mu)},
          {"lambda", format_number(cfg.lambda)},
          {"nu", format_number(cfg.nu())},
          {"eps", format_number(cfg.eps)},
          {"bc", to_string(cfg.bc)},
          {"picard_tol", format_number(cfg.picard_tol)},
          {"picard_max_iter", std::to_string(cfg.picard_max_iter)},
          {"picard_damping", format_number(cfg.picard_damping)},
          {"linear_tol", format_number(cfg.linear_tol)},
          {"output_dir", cfg.output_dir},
          {"snapshot_every", std::to_string(cfg.snapshot_every)},
          {"strict", cfg.strict ? "true" : "false"},
          {"p_monitor", format_number(cfg.p_monitor)},
          {"levels", levels},
          {"reference_factor", std::to_string(cfg.reference_factor)}};
}

inline nlohmann::ordered_json config_json(const SchemeConfig& cfg) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : normalized_config(cfg)) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------
// CSV time series
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "step", "t", "mass", "E_total", "E_kin", "E_int", "E_mag", "diss_visc", "diss_div",
      "diss_j", "numdiss_dtu", "numdiss_dtB", "numdiss_face", "budget_residual", "min_rho",
      "max_divB", "picard_iters"};
  return cols;
}

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double mass = 0.0;
  EnergyBudget budget;
  double min_rho = 0.0;
  double max_divB = 0.0;
  int iterations = 0;
};

inline StepRecord make_record(const State& prev, const State& cur, const SolveReport& rep, const SchemeConfig& cfg) {
  StepRecord r;
  r.step = cur.step;
  r.t = cur.t;
  r.mass = total_mass(cur);
  r.budget = energy_budget(prev, cur, cfg);
  r.min_rho = cur.rho.dofs.minCoeff();
  r.max_divB = max_abs_div(cur.B);
  r.iterations = rep.iterations;
  return r;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const SchemeConfig& cfg) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (const auto& [k, v] : normalized_config(cfg)) out_ << "# " << k << " = " << v << '\n';
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
    out_.flush();
  }

  void write(const StepRecord& r) {
    const auto& b = r.budget;
    const double values[] = {r.t, r.mass, b.total, b.kinetic, b.internal, b.magnetic, b.diss_visc,
                             b.diss_div, b.diss_j, b.numdiss_dtu, b.numdiss_dtB, b.numdiss_face,
                             b.budget_residual, r.min_rho, r.max_divB};
    out_ << r.step;
    for (double v : values) out_ << ',' << format_number(v);
    out_ << ',' << r.iterations << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// VTK snapshots
// ---------------------------------------------------------------------------

/// Compact one-line config summary for the VTK title (at most 255 chars).
inline std::string vtk_title(const SchemeConfig& cfg, const State& s) {
  std::ostringstream t;
  t << "mhdfvfe scheme=" << to_string(cfg.scheme) << " case=" << cfg.case_id << " n=" << cfg.n
    << " gamma=" << format_number(cfg.gamma) << " a=" << format_number(cfg.a) << " mu=" << format_number(cfg.mu)
    << " lambda=" << format_number(cfg.lambda) << " eps=" << format_number(cfg.eps) << " bc=" << to_string(cfg.bc)
    << " c_dt=" << format_number(cfg.c_dt) << " step=" << s.step << " t=" << format_number(s.t);
  std::string title = t.str();
  if (title.size() > 255) title.resize(255);
  return title;
}

/// Legacy ASCII unstructured grid. Points are duplicated per cell so every
/// cell carries its own unwrapped coordinates; fields are cell data (element
/// averages for u, B and E).
inline void write_vtk(const std::filesystem::path& path, const State& s, const SchemeConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Mesh& m = *s.mesh();
  const int nc = m.num_cells();
  const int nvpc = m.faces_per_cell();
  out << "# vtk DataFile Version 3.0\n" << vtk_title(cfg, s) << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nc * nvpc << " double\n";
  for (const auto& c : m.cells())
    for (int a = 0; a < nvpc; ++a)
      out << format_number(c.points[a].x()) << ' ' << format_number(c.points[a].y()) << " 0\n";
  out << "CELLS " << nc << ' ' << nc * (nvpc + 1) << '\n';
  for (int k = 0; k < nc; ++k) {
    out << nvpc;
    for (int a = 0; a < nvpc; ++a) out << ' ' << k * nvpc + a;
    out << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (int k = 0; k < nc; ++k) out << (nvpc == 3 ? 5 : 9) << '\n';

  const auto rule = quadrature::exact_rule(m.shape());
  const DiscreteField divB = div_h(s.B);
  out << "CELL_DATA " << nc << '\n';
  auto scalar = [&](const char* name, auto&& f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < nc; ++k) out << format_number(f(k)) << '\n';
  };
  auto vector = [&](const char* name, auto&& f) {
    out << "VECTORS " << name << " double\n";
    for (int k = 0; k < nc; ++k) {
      const Vec2 v = f(k);
      out << format_number(v.x()) << ' ' << format_number(v.y()) << " 0\n";
    }
  };
  auto mean_vector = [&](const DiscreteField& f, int k) {
    Vec2 v = Vec2::Zero();
    for (const auto& q : rule) v += q.weight * eval_vector(f, k, q);
    return v;
  };
  scalar("rho", [&](int k) { return s.rho.dofs[k]; });
  scalar("divB", [&](int k) { return divB.dofs[k]; });
  scalar("j", [&](int k) { return s.j.dofs[k]; });
  scalar("E", [&](int k) {
    double v = 0.0;
    for (const auto& q : rule) v += q.weight * eval_scalar(s.E, k, q);
    return v;
  });
  vector("u", [&](int k) { return mean_vector(s.u, k); });
  vector("B", [&](int k) { return mean_vector(s.B, k); });
}

inline void write_config_file(const std::filesystem::path& path, const SchemeConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [k, v] : normalized_config(cfg)) out << k << " = " << v << '\n';
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mhdfvfe::io
