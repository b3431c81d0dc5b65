#pragma once

// Batch commands behind the mhdfvfe executable. Each returns a process exit
// status: 0 success, 2 validation failure, 3 solver failure, 4 invariant
// failure.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhdfvfe/diagnostics.hpp"
#include "mhdfvfe/io.hpp"
#include "mhdfvfe/scheme.hpp"

namespace mhdfvfe::driver {

enum ExitCode : int { Success = 0, ValidationFailure = 2, SolverFailure = 3, InvariantFailure = 4 };

struct Tolerances {
  double mass = 1e-12;        // relative
  double divB = 1e-12;
  double dissipation = -1e-12;
  double budget_factor = 10.0;  // times picard_tol
  double balance = 1e-8;
  double renorm = 1e-9;
};

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Per-step invariant monitor shared by verify and the acceptance suite.
class InvariantTracker {
 public:
  InvariantTracker(const SchemeConfig& cfg, const State& initial, Tolerances tol = {})
      : cfg_(cfg), tol_(tol), mass0_(total_mass(initial)) {
    divB_ = max_abs_div(initial.B);
    min_rho_ = initial.rho.dofs.minCoeff();
  }

  void observe(const State& prev, const State& cur) {
    mass_ = std::max(mass_, std::abs(total_mass(cur) - mass0_) / std::abs(mass0_));
    divB_ = std::max(divB_, max_abs_div(cur.B));
    min_rho_ = std::min(min_rho_, cur.rho.dofs.minCoeff());
    const auto b = energy_budget(prev, cur, cfg_);
    budget_ = std::max(budget_, b.budget_residual);
    kinetic_ = std::max(kinetic_, std::abs(b.kinetic_balance));
    magnetic_ = std::max(magnetic_, std::abs(b.magnetic_balance));
    internal_ = std::max(internal_, b.internal_residual);
    for (double d : {b.diss_visc, b.diss_div, b.diss_j, b.numdiss_dtu, b.numdiss_dtB, b.numdiss_face})
      min_diss_ = std::min(min_diss_, d);
    renorm_ = std::max(renorm_, renorm_residual_square(prev, cur, cfg_));
    ++steps_;
  }

  std::vector<Check> checks() const {
    const double budget_tol = tol_.budget_factor * cfg_.picard_tol;
    return {{"mass_conservation", mass_, tol_.mass, mass_ <= tol_.mass},
            {"divergence_free", divB_, tol_.divB, divB_ <= tol_.divB},
            {"positivity", min_rho_, 0.0, min_rho_ > 0.0},
            {"dissipation_nonnegative", min_diss_, tol_.dissipation, min_diss_ >= tol_.dissipation},
            {"energy_inequality", budget_, budget_tol, budget_ <= budget_tol},
            {"internal_energy_inequality", internal_, 0.0, internal_ <= budget_tol},
            {"kinetic_balance", kinetic_, tol_.balance, kinetic_ <= tol_.balance},
            {"magnetic_balance", magnetic_, tol_.balance, magnetic_ <= tol_.balance},
            {"renormalized_continuity", renorm_, tol_.renorm, renorm_ <= tol_.renorm}};
  }

  int steps() const { return steps_; }

 private:
  SchemeConfig cfg_;
  Tolerances tol_;
  double mass0_;
  double mass_ = 0.0, divB_ = 0.0, min_rho_ = 0.0;
  double budget_ = -1e300, kinetic_ = 0.0, magnetic_ = 0.0, internal_ = -1e300;
  double min_diss_ = 0.0, renorm_ = 0.0;
  int steps_ = 0;
};

namespace detail {

inline std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string snapshot_name(int step) {
  std::ostringstream s;
  s << "snapshot_" << std::setw(6) << std::setfill('0') << step << ".vtk";
  return s.str();
}

inline nlohmann::ordered_json solve_summary(const RunResult& r) {
  int total_iter = 0, max_iter = 0;
  double max_res = 0.0;
  for (const auto& rep : r.reports) {
    total_iter += rep.iterations;
    max_iter = std::max(max_iter, rep.iterations);
    max_res = std::max(max_res, rep.residual);
  }
  nlohmann::ordered_json j;
  j["steps_completed"] = r.reports.size();
  j["steps_planned"] = r.grid.steps;
  j["total_iterations"] = total_iter;
  j["max_iterations"] = max_iter;
  j["max_residual"] = max_res;
  if (r.failure) j["failure"] = *r.failure;
  return j;
}

/// Validates and reports warnings; returns false on a hard error.
inline bool validate_or_report(const SchemeConfig& cfg, std::ostream& err) {
  try {
    for (const auto& w : validate(cfg).warnings) err << "warning: " << w << '\n';
    const auto data = get_case(cfg.case_id);
    if (!data.admits(cfg.bc))
      throw ConfigError("case '" + cfg.case_id + "' does not admit boundary condition " + to_string(cfg.bc));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return false;
  }
  return true;
}

}  // namespace detail

/// Time series, VTK snapshots and a run summary in cfg.output_dir.
inline int cmd_run(const SchemeConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  if (!detail::validate_or_report(cfg, err)) return ValidationFailure;
  const auto dir = detail::prepare_dir(cfg.output_dir);
  io::write_config_file(dir / "config.txt", cfg);
  io::CsvWriter csv(dir / "timeseries.csv", cfg);
  const int steps = time_grid(cfg).steps;
  bool initial_written = false;
  auto observer = [&](const State& prev, const State& cur, const SolveReport& rep) {
    if (!initial_written) {
      io::write_vtk(dir / detail::snapshot_name(prev.step), prev, cfg);
      initial_written = true;
    }
    csv.write(io::make_record(prev, cur, rep, cfg));
    const bool snap = (cfg.snapshot_every > 0 && cur.step % cfg.snapshot_every == 0) || cur.step == steps;
    if (snap) io::write_vtk(dir / detail::snapshot_name(cur.step), cur, cfg);
  };
  const RunResult r = run(cfg, get_case(cfg.case_id), std::nullopt, observer);
  if (!initial_written && !r.trajectory.empty())
    io::write_vtk(dir / detail::snapshot_name(0), r.trajectory.front(), cfg);

  nlohmann::ordered_json j;
  j["command"] = "run";
  j["config"] = io::config_json(cfg);
  j["solve"] = detail::solve_summary(r);
  io::write_json(dir / "run_report.json", j);
  if (!r.ok()) {
    err << "solver failure: " << *r.failure << '\n';
    if (!r.trajectory.empty()) {
      const State& last = r.trajectory.back();
      io::write_vtk(dir / detail::snapshot_name(last.step), last, cfg);
    }
    return SolverFailure;
  }
  log << "run: " << r.reports.size() << " steps, output in " << dir.string() << '\n';
  return Success;
}

/// Runs the configured case and checks the discrete invariants step by step.
inline int cmd_verify(const SchemeConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  if (!detail::validate_or_report(cfg, err)) return ValidationFailure;
  const auto dir = detail::prepare_dir(cfg.output_dir);
  io::write_config_file(dir / "config.txt", cfg);
  io::CsvWriter csv(dir / "timeseries.csv", cfg);
  std::optional<InvariantTracker> tracker;
  auto observer = [&](const State& prev, const State& cur, const SolveReport& rep) {
    if (!tracker) tracker.emplace(cfg, prev);
    tracker->observe(prev, cur);
    csv.write(io::make_record(prev, cur, rep, cfg));
  };
  const RunResult r = run(cfg, get_case(cfg.case_id), std::nullopt, observer);
  if (!tracker && !r.trajectory.empty()) tracker.emplace(cfg, r.trajectory.front());

  nlohmann::ordered_json j;
  j["command"] = "verify";
  j["config"] = io::config_json(cfg);
  j["solve"] = detail::solve_summary(r);
  bool all = true;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : tracker->checks()) {
    checks.push_back({{"name", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    log << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << io::format_number(c.measured)
        << " tolerance=" << io::format_number(c.tolerance) << '\n';
    all = all && c.pass;
  }
  j["checks"] = checks;
  j["pass"] = all && r.ok();
  io::write_json(dir / "verify_report.json", j);
  if (!r.ok()) {
    err << "solver failure: " << *r.failure << '\n';
    return SolverFailure;
  }
  return all ? Success : InvariantFailure;
}

/// Refinement study over cfg.levels: consistency residuals, a-priori
/// monitors and, when reference_factor > 1, self-convergence errors against
/// a run on n = reference_factor * max(levels).
inline int cmd_study(const SchemeConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  if (!detail::validate_or_report(cfg, err)) return ValidationFailure;
  const auto dir = detail::prepare_dir(cfg.output_dir);
  io::write_config_file(dir / "config.txt", cfg);
  std::vector<int> levels = cfg.levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const NamedCase data = get_case(cfg.case_id);

  struct Level {
    int n;
    double h;
    ConsistencyReport consistency;
    MonitorSummary monitors;
    State final_state;
    std::optional<double> err_rho, err_u, err_B;
  };
  std::vector<Level> results;
  for (int n : levels) {
    SchemeConfig lc = cfg;
    lc.n = n;
    lc.output_dir = (dir / ("n" + std::to_string(n))).string();
    const auto ldir = detail::prepare_dir(lc.output_dir);
    io::write_config_file(ldir / "config.txt", lc);
    io::CsvWriter csv(ldir / "timeseries.csv", lc);
    auto observer = [&](const State& prev, const State& cur, const SolveReport& rep) {
      csv.write(io::make_record(prev, cur, rep, lc));
    };
    const RunResult r = run(lc, data, std::nullopt, observer);
    if (!r.ok()) {
      err << "solver failure at n = " << n << ": " << *r.failure << '\n';
      return SolverFailure;
    }
    results.push_back({n, mesh_size(n), consistency_residuals(r.trajectory, lc, r.grid.T),
                       summarize_monitors(r.trajectory, lc), r.trajectory.back(), {}, {}, {}});
    log << "study: n = " << n << " done (" << r.reports.size() << " steps)\n";
  }

  const bool self_convergence = cfg.reference_factor > 1;
  if (self_convergence) {
    SchemeConfig rc = cfg;
    rc.n = cfg.reference_factor * levels.back();
    const RunResult r = run(rc, data);
    if (!r.ok()) {
      err << "solver failure on the reference mesh n = " << rc.n << ": " << *r.failure << '\n';
      return SolverFailure;
    }
    const State& ref = r.trajectory.back();
    for (auto& L : results) {
      L.err_rho = l2_difference(L.final_state.rho, ref.rho);
      L.err_u = l2_difference(cell_velocity(L.final_state), cell_velocity(ref));
      L.err_B = l2_difference(L.final_state.B, ref.B);
    }
    log << "study: reference n = " << rc.n << " done\n";
  }

  const TestKind kinds[] = {TestKind::Continuity, TestKind::Momentum, TestKind::Maxwell, TestKind::Ampere};
  std::vector<double> hs;
  for (const auto& L : results) hs.push_back(L.h);
  auto column_eoc = [&](auto&& value) -> nlohmann::ordered_json {
    std::vector<double> e;
    for (const auto& L : results) e.push_back(value(L));
    if (e.size() < 2 || std::any_of(e.begin(), e.end(), [](double v) { return !(v > 0); }))
      return nullptr;
    return eoc(e, hs);
  };

  {
    std::ofstream out(dir / "study.csv");
    for (const auto& [k, v] : io::normalized_config(cfg)) out << "# " << k << " = " << v << '\n';
    out << "n,h,e1,e2,e3,e4,max_divB";
    if (self_convergence) out << ",err_rho,err_u,err_B";
    for (const auto& name : results.front().monitors.names) out << ',' << name;
    out << '\n';
    for (const auto& L : results) {
      out << L.n << ',' << io::format_number(L.h);
      for (auto kind : kinds) out << ',' << io::format_number(L.consistency.e(kind));
      out << ',' << io::format_number(L.consistency.max_divB);
      if (self_convergence)
        out << ',' << io::format_number(*L.err_rho) << ',' << io::format_number(*L.err_u) << ','
            << io::format_number(*L.err_B);
      for (double v : L.monitors.values) out << ',' << io::format_number(v);
      out << '\n';
    }
  }

  nlohmann::ordered_json j;
  j["command"] = "study";
  j["config"] = io::config_json(cfg);
  nlohmann::ordered_json lv = nlohmann::ordered_json::array();
  for (const auto& L : results) {
    nlohmann::ordered_json e;
    e["n"] = L.n;
    e["h"] = L.h;
    for (auto kind : kinds) e[std::string("e_") + to_string(kind)] = L.consistency.e(kind);
    nlohmann::ordered_json tf;
    for (const auto& en : L.consistency.entries) tf[en.name] = en.residual;
    e["test_functions"] = tf;
    e["max_divB"] = L.consistency.max_divB;
    if (self_convergence) e["self_convergence"] = {{"rho", *L.err_rho}, {"u", *L.err_u}, {"B", *L.err_B}};
    nlohmann::ordered_json mon;
    for (std::size_t i = 0; i < L.monitors.names.size(); ++i)
      mon[L.monitors.names[i]] = {{"value", L.monitors.values[i]}, {"time_norm", L.monitors.time_norm[i]}};
    e["monitors"] = mon;
    lv.push_back(e);
  }
  j["levels"] = lv;
  nlohmann::ordered_json orders;
  bool monotone = true;
  for (auto kind : kinds) {
    const auto name = std::string("e_") + to_string(kind);
    orders[name] = column_eoc([&](const Level& L) { return L.consistency.e(kind); });
    for (std::size_t i = 1; i < results.size(); ++i)
      monotone = monotone && results[i].consistency.e(kind) < results[i - 1].consistency.e(kind);
  }
  if (self_convergence) {
    orders["err_rho"] = column_eoc([](const Level& L) { return *L.err_rho; });
    orders["err_u"] = column_eoc([](const Level& L) { return *L.err_u; });
    orders["err_B"] = column_eoc([](const Level& L) { return *L.err_B; });
  }
  j["eoc"] = orders;
  j["residuals_monotone"] = monotone;
  io::write_json(dir / "study.json", j);

  log << std::setw(6) << "n" << std::setw(14) << "e1" << std::setw(14) << "e2" << std::setw(14) << "e3"
      << std::setw(14) << "e4" << '\n';
  for (const auto& L : results) {
    log << std::setw(6) << L.n;
    for (auto kind : kinds) log << std::setw(14) << std::setprecision(4) << L.consistency.e(kind);
    log << '\n';
  }
  return Success;
}

}  // namespace mhdfvfe::driver
