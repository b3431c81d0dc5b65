#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mhdfvfe/driver.hpp"

int main(int argc, char** argv) {
  using namespace mhdfvfe;
  CLI::App app{"Mixed finite volume / finite element solver for compressible viscous MHD"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool strict = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_flag("--strict", strict, "reject parameters outside the convergence windows");
  };
  auto* run = app.add_subcommand("run", "time series and field snapshots");
  auto* verify = app.add_subcommand("verify", "run and check the discrete invariants");
  auto* study = app.add_subcommand("study", "refinement study over the configured levels");
  for (auto* s : {run, verify, study}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : driver::ValidationFailure;
  }

  SchemeConfig cfg;
  try {
    cfg = io::load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return driver::ValidationFailure;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (strict) cfg.strict = true;

  try {
    if (run->parsed()) return driver::cmd_run(cfg);
    if (verify->parsed()) return driver::cmd_verify(cfg);
    return driver::cmd_study(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return driver::ValidationFailure;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return driver::SolverFailure;
  }
}
