#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mhdfvfe/driver.hpp"
#include "mhdfvfe/io.hpp"

using namespace mhdfvfe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mhdfvfe_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Io, NumberFormattingRoundTrips) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-2.5e-300), "-2.5e-300");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = U(rng) * std::pow(10.0, static_cast<int>(U(rng)) % 40);
    EXPECT_EQ(std::stod(io::format_number(v)), v);
  }
}

TEST(Io, ParseConfig) {
  const auto cfg = io::parse_config_string(
      "# comment\n\nscheme = II   # trailing\ncase = vortex-ot\nn = 12\nc_dt=0.1\nT = 0.5\n"
      "gamma = 1.4\neps = 0.5\nbc = no-slip\nlevels = 4, 8,16\nstrict = true\nsnapshot_every = 3\n");
  EXPECT_EQ(cfg.scheme, SchemeKind::II);
  EXPECT_EQ(cfg.case_id, "vortex-ot");
  EXPECT_EQ(cfg.n, 12);
  EXPECT_DOUBLE_EQ(cfg.c_dt, 0.1);
  EXPECT_DOUBLE_EQ(cfg.T, 0.5);
  EXPECT_DOUBLE_EQ(cfg.gamma, 1.4);
  EXPECT_EQ(cfg.bc, BoundaryKind::NoSlip);
  EXPECT_EQ(cfg.levels, (std::vector<int>{4, 8, 16}));
  EXPECT_TRUE(cfg.strict);
  EXPECT_EQ(cfg.snapshot_every, 3);
  EXPECT_FALSE(cfg.steps.has_value());

  EXPECT_THROW(io::parse_config_string("colour = red\n"), ConfigError);
  EXPECT_THROW(io::parse_config_string("n = 3.5\n"), ConfigError);
  EXPECT_THROW(io::parse_config_string("mu = fast\n"), ConfigError);
  EXPECT_THROW(io::parse_config_string("just a line\n"), ConfigError);
  EXPECT_THROW(io::parse_config_string("scheme = III\n"), ConfigError);
  EXPECT_THROW(io::parse_config_string("n =\n"), ConfigError);
  EXPECT_THROW(io::load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Io, NormalizedConfigRoundTrip) {
  SchemeConfig cfg;
  cfg.gamma = 1.0 / 3.0 + 1.0;
  cfg.mu = 0.123456789012345678;
  cfg.levels = {6, 12};
  const auto dir = scratch("roundtrip");
  fs::create_directories(dir);
  io::write_config_file(dir / "config.txt", cfg);
  // derived keys are not settable; drop them before parsing back
  std::ostringstream settable;
  for (const auto& l : lines(dir / "config.txt"))
    if (l.rfind("dt ", 0) != 0 && l.rfind("h ", 0) != 0 && l.rfind("nu ", 0) != 0 && l.rfind("steps ", 0) != 0)
      settable << l << '\n';
  const auto back = io::parse_config_string(settable.str());
  EXPECT_EQ(io::normalized_config(back), io::normalized_config(cfg));
  EXPECT_EQ(back.gamma, cfg.gamma);
  EXPECT_EQ(back.mu, cfg.mu);
}

TEST(Io, CsvHeaderAndColumns) {
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  SchemeConfig cfg;
  { io::CsvWriter w(dir / "a.csv", cfg); }
  const auto l = lines(dir / "a.csv");
  const auto n = io::normalized_config(cfg).size();
  ASSERT_EQ(l.size(), n + 1);
  EXPECT_EQ(l[0], "# scheme = I");
  EXPECT_EQ(l[n],
            "step,t,mass,E_total,E_kin,E_int,E_mag,diss_visc,diss_div,diss_j,numdiss_dtu,numdiss_dtB,"
            "numdiss_face,budget_residual,min_rho,max_divB,picard_iters");
}

TEST(Io, VtkSnapshot) {
  SchemeConfig cfg;
  cfg.n = 3;
  cfg.steps = 1;
  cfg.case_id = "density-wave";
  for (auto s : {SchemeKind::I, SchemeKind::II}) {
    cfg.scheme = s;
    const auto r = run(cfg);
    const auto dir = scratch("vtk");
    fs::create_directories(dir);
    io::write_vtk(dir / "s.vtk", r.trajectory.back(), cfg);
    const auto l = lines(dir / "s.vtk");
    const int nc = s == SchemeKind::I ? 18 : 9, nv = s == SchemeKind::I ? 3 : 4;
    EXPECT_EQ(l[0], "# vtk DataFile Version 3.0");
    EXPECT_LE(l[1].size(), 255u);
    EXPECT_NE(l[1].find("case=density-wave"), std::string::npos);
    EXPECT_EQ(l[2], "ASCII");
    EXPECT_EQ(l[3], "DATASET UNSTRUCTURED_GRID");
    EXPECT_EQ(l[4], "POINTS " + std::to_string(nc * nv) + " double");
    const std::string text = slurp(dir / "s.vtk");
    EXPECT_NE(text.find("CELLS " + std::to_string(nc) + " " + std::to_string(nc * (nv + 1))), std::string::npos);
    EXPECT_NE(text.find("CELL_DATA " + std::to_string(nc)), std::string::npos);
    for (const char* f : {"SCALARS rho", "SCALARS divB", "SCALARS j", "SCALARS E", "VECTORS u", "VECTORS B"})
      EXPECT_NE(text.find(f), std::string::npos) << f;
  }
}

TEST(Io, RunConstantCaseGivesIdenticalEnergyRows) {
  SchemeConfig cfg;
  cfg.case_id = "constant";
  cfg.n = 4;
  cfg.steps = 10;
  cfg.output_dir = scratch("run").string();
  std::ostringstream log, err;
  ASSERT_EQ(driver::cmd_run(cfg, log, err), driver::Success) << err.str();
  const auto l = lines(fs::path(cfg.output_dir) / "timeseries.csv");
  const auto header = io::normalized_config(cfg).size() + 1;
  ASSERT_EQ(l.size(), header + 10);
  auto energy_part = [](const std::string& row) {
    // columns E_total .. E_mag
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    return cols[3] + cols[4] + cols[5] + cols[6];
  };
  for (std::size_t i = header + 1; i < l.size(); ++i) EXPECT_EQ(energy_part(l[i]), energy_part(l[header]));
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "snapshot_000000.vtk"));
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "snapshot_000010.vtk"));
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "run_report.json"));
}

TEST(Io, RunIsDeterministic) {
  SchemeConfig cfg;
  cfg.case_id = "vortex-ot";
  cfg.n = 4;
  cfg.steps = 3;
  std::ostringstream log, err;
  cfg.output_dir = scratch("det_a").string();
  ASSERT_EQ(driver::cmd_run(cfg, log, err), 0);
  const auto a = slurp(fs::path(cfg.output_dir) / "timeseries.csv");
  cfg.output_dir = scratch("det_b").string();
  ASSERT_EQ(driver::cmd_run(cfg, log, err), 0);
  const auto b = slurp(fs::path(cfg.output_dir) / "timeseries.csv");
  // output_dir is part of the header; compare the data rows
  EXPECT_EQ(a.substr(a.find("step,")), b.substr(b.find("step,")));
}

TEST(Io, VerifyPassesOnDensityWave) {
  SchemeConfig cfg;
  cfg.case_id = "density-wave";
  cfg.n = 8;
  cfg.steps = 5;
  cfg.output_dir = scratch("verify").string();
  std::ostringstream log, err;
  EXPECT_EQ(driver::cmd_verify(cfg, log, err), driver::Success) << log.str() << err.str();
  const auto report = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "verify_report.json"));
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_EQ(report["checks"].size(), 9u);
}

TEST(Io, ExitCodes) {
  std::ostringstream log, err;
  SchemeConfig bad;
  bad.mu = -1.0;
  bad.output_dir = scratch("bad").string();
  EXPECT_EQ(driver::cmd_run(bad, log, err), driver::ValidationFailure);
  EXPECT_EQ(driver::cmd_verify(bad, log, err), driver::ValidationFailure);
  EXPECT_EQ(driver::cmd_study(bad, log, err), driver::ValidationFailure);

  SchemeConfig strict;
  strict.strict = true;
  strict.gamma = 1.1;
  EXPECT_EQ(driver::cmd_run(strict, log, err), driver::ValidationFailure);
  SchemeConfig unknown;
  unknown.case_id = "nope";
  EXPECT_EQ(driver::cmd_run(unknown, log, err), driver::ValidationFailure);

  SchemeConfig fail;
  fail.case_id = "vortex-ot";
  fail.n = 4;
  fail.steps = 3;
  fail.picard_max_iter = 1;
  fail.picard_tol = 1e-15;
  fail.output_dir = scratch("fail").string();
  EXPECT_EQ(driver::cmd_run(fail, log, err), driver::SolverFailure);
  // partial outputs are kept
  EXPECT_TRUE(fs::exists(fs::path(fail.output_dir) / "timeseries.csv"));
  EXPECT_TRUE(fs::exists(fs::path(fail.output_dir) / "run_report.json"));
  EXPECT_TRUE(fs::exists(fs::path(fail.output_dir) / "snapshot_000000.vtk"));

  SchemeConfig loose;
  loose.case_id = "vortex-ot";
  loose.n = 4;
  loose.steps = 2;
  loose.picard_tol = 1e-2;
  loose.picard_damping = 0.5;
  loose.output_dir = scratch("loose").string();
  EXPECT_EQ(driver::cmd_verify(loose, log, err), driver::InvariantFailure);
}

TEST(Io, StudyWritesTables) {
  SchemeConfig cfg;
  cfg.case_id = "vortex-ot";
  cfg.T = 0.05;
  cfg.levels = {4, 8};
  cfg.reference_factor = 2;
  cfg.output_dir = scratch("study").string();
  std::ostringstream log, err;
  ASSERT_EQ(driver::cmd_study(cfg, log, err), driver::Success) << err.str();
  const fs::path dir(cfg.output_dir);
  const auto csv = lines(dir / "study.csv");
  const auto header = io::normalized_config(cfg).size();
  ASSERT_EQ(csv.size(), header + 3);
  EXPECT_EQ(csv[header].rfind("n,h,e1,e2,e3,e4,max_divB,err_rho,err_u,err_B,rho_Lgamma", 0), 0u);
  const auto j = nlohmann::json::parse(slurp(dir / "study.json"));
  EXPECT_EQ(j["levels"].size(), 2u);
  EXPECT_EQ(j["eoc"]["e_continuity"].size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "n4" / "timeseries.csv"));
  EXPECT_TRUE(fs::exists(dir / "n8" / "timeseries.csv"));
}
