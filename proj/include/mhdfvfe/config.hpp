#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhdfvfe/errors.hpp"

namespace mhdfvfe {

enum class SchemeKind { I, II };
enum class BoundaryKind { Periodic, NoSlip };

inline const char* to_string(SchemeKind s) { return s == SchemeKind::I ? "I" : "II"; }
inline const char* to_string(BoundaryKind b) {
  return b == BoundaryKind::Periodic ? "periodic" : "no-slip";
}

struct SchemeConfig {
  SchemeKind scheme = SchemeKind::I;
  std::string case_id = "density-wave";
  int n = 16;
  double c_dt = 0.2;
  double T = 0.1;
  std::optional<int> steps;  // overrides T: runs exactly this many steps of c_dt * h

  double gamma = 5.0 / 3.0;
  double a = 1.0;
  double mu = 0.1;
  double lambda = 0.0;
  double eps = 1.0;
  BoundaryKind bc = BoundaryKind::Periodic;

  double picard_tol = 1e-10;
  int picard_max_iter = 100;
  double picard_damping = 1.0;
  double linear_tol = 1e-11;

  std::string output_dir = "out";
  int snapshot_every = 0;  // 0: initial and final snapshot only
  bool strict = false;
  double p_monitor = 6.0;
  std::vector<int> levels{8, 16, 32};
  int reference_factor = 4;

  static constexpr int d = 2;
  double nu() const { return (d - 2.0) / d * mu + lambda; }
};

/// Mesh size of an n x n mesh of the unit square (diagonal of one square).
inline double mesh_size(int n) { return std::sqrt(2.0) / n; }

struct TimeGrid {
  int steps = 0;
  double dt = 0.0;
  double T = 0.0;
};

/// dt = c_dt h, rounded down so that an integer number of steps lands on T.
inline TimeGrid time_grid(const SchemeConfig& cfg) {
  const double h = mesh_size(cfg.n);
  TimeGrid g;
  if (cfg.steps) {
    g.steps = *cfg.steps;
    g.dt = cfg.c_dt * h;
    g.T = g.steps * g.dt;
  } else {
    g.steps = std::max(1, static_cast<int>(std::ceil(cfg.T / (cfg.c_dt * h) - 1e-9)));
    g.dt = cfg.T / g.steps;
    g.T = cfg.T;
  }
  return g;
}

/// Upper end of the admissible eps window when gamma < 2.
inline double eps_window_upper(double gamma, int d = 2) { return 2.0 * gamma - 1.0 - d / 3.0; }

/// Lower bound on gamma required for Scheme-I convergence.
inline double gamma_threshold_scheme1(int d = 2) { return 4.0 * d / (1.0 + 3.0 * d); }

struct ValidationResult {
  std::vector<std::string> warnings;
};

/// Hard errors throw ConfigError. Parameters outside the convergence windows
/// throw in strict mode and are reported as warnings otherwise.
inline ValidationResult validate(const SchemeConfig& cfg) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(cfg.mu > 0)) fail("mu must be positive");
  if (!(cfg.gamma > 1)) fail("gamma must exceed 1");
  if (!(cfg.eps > -1)) fail("eps must exceed -1");
  if (!(cfg.nu() >= 0)) fail("nu = (d-2)/d mu + lambda must be non-negative");
  if (!(cfg.a > 0)) fail("a must be positive");
  if (cfg.n < 2) fail("n must be at least 2");
  if (!(cfg.c_dt > 0)) fail("c_dt must be positive");
  if (cfg.steps) {
    if (*cfg.steps < 1) fail("steps must be positive");
  } else if (!(cfg.T > 0)) {
    fail("T must be positive");
  }
  if (!(cfg.picard_tol > 0)) fail("picard_tol must be positive");
  if (cfg.picard_max_iter < 1) fail("picard_max_iter must be positive");
  if (!(cfg.picard_damping > 0 && cfg.picard_damping <= 1)) fail("picard_damping must lie in (0, 1]");
  if (!(cfg.p_monitor >= 1)) fail("p_monitor must be at least 1");
  if (cfg.reference_factor < 1) fail("reference_factor must be positive");
  for (int l : cfg.levels)
    if (l < 2) fail("levels must be at least 2");

  ValidationResult r;
  auto window = [&](const std::string& m) {
    if (cfg.strict) throw ConfigError(m);
    r.warnings.push_back(m);
  };
  std::ostringstream msg;
  if (cfg.scheme == SchemeKind::I) {
    const double g0 = gamma_threshold_scheme1();
    if (!(cfg.gamma > g0)) {
      msg << "gamma = " << cfg.gamma << " is not above 4d/(1+3d) = " << g0;
      window(msg.str());
      msg.str("");
    }
  }
  if (!(cfg.eps > 0)) {
    msg << "eps = " << cfg.eps << " is outside the convergence window (0, ...)";
    window(msg.str());
  } else if (cfg.gamma < 2 && !(cfg.eps < eps_window_upper(cfg.gamma))) {
    msg << "eps = " << cfg.eps << " is outside the convergence window (0, "
        << eps_window_upper(cfg.gamma) << ") for gamma = " << cfg.gamma;
    window(msg.str());
  }
  return r;
}

}  // namespace mhdfvfe
