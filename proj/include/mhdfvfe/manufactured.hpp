#pragma once

// Named initial data and the smooth test functions used by the consistency
// residuals.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "mhdfvfe/config.hpp"
#include "mhdfvfe/errors.hpp"
#include "mhdfvfe/mesh.hpp"

namespace mhdfvfe {

/// Initial data. B0 = B_const + curl(potential) with curl phi = (d2 phi, -d1 phi).
struct NamedCase {
  std::string id;
  std::function<double(const Vec2&)> rho0;
  std::function<Vec2(const Vec2&)> u0;
  Vec2 B_const = Vec2::Zero();
  std::function<double(const Vec2&)> potential;
  std::function<Vec2(const Vec2&)> potential_gradient;
  std::vector<BoundaryKind> admissible_bc;
  std::string doc;

  Vec2 B0(const Vec2& x) const { return B_const + rotate_cw(potential_gradient(x)); }
  bool admits(BoundaryKind bc) const {
    for (auto b : admissible_bc)
      if (b == bc) return true;
    return false;
  }
};

inline std::vector<std::string> case_ids() { return {"constant", "density-wave", "vortex-ot"}; }

inline NamedCase get_case(const std::string& id) {
  using std::cos;
  using std::sin;
  constexpr double tau = 2.0 * std::numbers::pi;
  NamedCase c;
  c.id = id;
  c.admissible_bc = {BoundaryKind::Periodic};
  if (id == "constant") {
    c.rho0 = [](const Vec2&) { return 1.0; };
    c.u0 = [](const Vec2&) { return Vec2(0.0, 0.0); };
    c.B_const = Vec2(1.0, 0.0);
    c.potential = [](const Vec2&) { return 0.0; };
    c.potential_gradient = [](const Vec2&) { return Vec2(0.0, 0.0); };
    c.doc = "rho = 1, u = 0, B = (1, 0)";
  } else if (id == "density-wave") {
    c.rho0 = [](const Vec2& x) { return 1.0 + 0.5 * sin(tau * x.x()); };
    c.u0 = [](const Vec2&) { return Vec2(1.0, 0.0); };
    c.potential = [](const Vec2& x) { return sin(tau * x.x()) * sin(tau * x.y()); };
    c.potential_gradient = [](const Vec2& x) {
      return Vec2(tau * cos(tau * x.x()) * sin(tau * x.y()), tau * sin(tau * x.x()) * cos(tau * x.y()));
    };
    c.doc = "rho = 1 + sin(2 pi x1)/2, u = (1, 0), B = curl(sin(2 pi x1) sin(2 pi x2))";
  } else if (id == "vortex-ot") {
    c.rho0 = [](const Vec2& x) { return 1.0 + 0.25 * cos(tau * x.x()); };
    c.u0 = [](const Vec2& x) { return Vec2(-sin(tau * x.y()), sin(tau * x.x())); };
    c.potential = [](const Vec2& x) { return cos(tau * x.x()) + cos(tau * x.y()); };
    c.potential_gradient = [](const Vec2& x) {
      return Vec2(-tau * sin(tau * x.x()), -tau * sin(tau * x.y()));
    };
    c.doc = "Orszag-Tang type vortex: u = (-sin 2 pi x2, sin 2 pi x1), "
            "B = curl(cos 2 pi x1 + cos 2 pi x2), rho = 1 + cos(2 pi x1)/4";
  } else {
    throw ConfigError("unknown case '" + id + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

enum class TestKind { Continuity, Momentum, Maxwell, Ampere };

inline const char* to_string(TestKind k) {
  switch (k) {
    case TestKind::Continuity: return "continuity";
    case TestKind::Momentum: return "momentum";
    case TestKind::Maxwell: return "maxwell";
    case TestKind::Ampere: return "ampere";
  }
  return "?";
}

/// Temporal factor eta(t) = cos^2(pi t / (2T)): eta(0) = 1, eta(T) = 0 with
/// vanishing derivative, so the product is supported in [0, T) to first order.
struct TimeFactor {
  double T = 1.0;
  double value(double t) const {
    const double c = std::cos(std::numbers::pi * t / (2.0 * T));
    return c * c;
  }
  double derivative(double t) const {
    const double w = std::numbers::pi / (2.0 * T);
    return -w * std::sin(2.0 * w * t);
  }
};

/// Scalar test function phi(t, x) = eta(t) s(x) (continuity, Ampere).
struct ScalarTest {
  std::string name;
  TimeFactor eta;
  std::function<double(const Vec2&)> s;
  std::function<Vec2(const Vec2&)> grad_s;
  double value(double t, const Vec2& x) const { return eta.value(t) * s(x); }
  double dt(double t, const Vec2& x) const { return eta.derivative(t) * s(x); }
  Vec2 grad(double t, const Vec2& x) const { return eta.value(t) * grad_s(x); }
  /// Vector curl (d2 psi, -d1 psi).
  Vec2 curl(double t, const Vec2& x) const { return eta.value(t) * rotate_cw(grad_s(x)); }
};

/// Vector test function v(t, x) = eta(t) w(x) (momentum, Maxwell).
struct VectorTest {
  std::string name;
  TimeFactor eta;
  std::function<Vec2(const Vec2&)> w;
  std::function<Mat2(const Vec2&)> jac_w;  // (a, b) = d_b w_a
  Vec2 value(double t, const Vec2& x) const { return eta.value(t) * w(x); }
  Vec2 dt(double t, const Vec2& x) const { return eta.derivative(t) * w(x); }
  Mat2 grad(double t, const Vec2& x) const { return eta.value(t) * jac_w(x); }
  double div(double t, const Vec2& x) const { return grad(t, x).trace(); }
  /// Scalar curl d1 w2 - d2 w1.
  double curl(double t, const Vec2& x) const {
    const Mat2 g = grad(t, x);
    return g(1, 0) - g(0, 1);
  }
};

inline int catalogue_size(TestKind kind) {
  switch (kind) {
    case TestKind::Continuity: return 1;
    case TestKind::Momentum: return 2;
    case TestKind::Maxwell: return 1;
    case TestKind::Ampere: return 2;
  }
  return 0;
}

inline void check_index(TestKind kind, int index) {
  if (index < 0 || index >= catalogue_size(kind))
    throw std::out_of_range(std::string(to_string(kind)) + " test function index " +
                            std::to_string(index) + " out of range");
}

inline ScalarTest scalar_test_function(TestKind kind, int index, double T) {
  using std::cos;
  using std::sin;
  constexpr double tau = 2.0 * std::numbers::pi;
  check_index(kind, index);
  ScalarTest f;
  f.eta.T = T;
  if (kind == TestKind::Continuity) {
    f.name = "continuity#0";
    f.s = [](const Vec2& x) { return cos(tau * x.x()); };
    f.grad_s = [](const Vec2& x) { return Vec2(-tau * sin(tau * x.x()), 0.0); };
  } else if (kind == TestKind::Ampere && index == 0) {
    f.name = "ampere#0";
    f.s = [](const Vec2& x) { return cos(tau * x.x()) - cos(tau * x.y()); };
    f.grad_s = [](const Vec2& x) { return Vec2(-tau * sin(tau * x.x()), tau * sin(tau * x.y())); };
  } else if (kind == TestKind::Ampere) {
    f.name = "ampere#1";
    f.s = [](const Vec2& x) { return sin(tau * x.x()) * sin(tau * x.y()); };
    f.grad_s = [](const Vec2& x) {
      return Vec2(tau * cos(tau * x.x()) * sin(tau * x.y()), tau * sin(tau * x.x()) * cos(tau * x.y()));
    };
  } else {
    throw std::invalid_argument("scalar_test_function: kind has vector test functions");
  }
  return f;
}

inline VectorTest vector_test_function(TestKind kind, int index, double T) {
  using std::cos;
  using std::sin;
  constexpr double tau = 2.0 * std::numbers::pi;
  constexpr double pi = std::numbers::pi;
  check_index(kind, index);
  VectorTest f;
  f.eta.T = T;
  if (kind == TestKind::Momentum && index == 0) {
    // sin^2 bump, vanishes with its gradient on the walls
    f.name = "momentum#0";
    f.w = [](const Vec2& x) {
      const double s = std::pow(sin(pi * x.x()) * sin(pi * x.y()), 2);
      return Vec2(s, s);
    };
    f.jac_w = [](const Vec2& x) {
      const double sx = sin(pi * x.x()), sy = sin(pi * x.y());
      const double dx = pi * sin(tau * x.x()) * sy * sy;
      const double dy = pi * sin(tau * x.y()) * sx * sx;
      Mat2 m;
      m << dx, dy, dx, dy;
      return m;
    };
  } else if (kind == TestKind::Momentum) {
    f.name = "momentum#1";
    f.w = [](const Vec2& x) { return Vec2(sin(tau * x.y()), sin(tau * x.x())); };
    f.jac_w = [](const Vec2& x) {
      Mat2 m;
      m << 0.0, tau * cos(tau * x.y()), tau * cos(tau * x.x()), 0.0;
      return m;
    };
  } else if (kind == TestKind::Maxwell) {
    // curl of sin(2 pi x1) sin(2 pi x2): tangential to the walls
    f.name = "maxwell#0";
    f.w = [](const Vec2& x) {
      return Vec2(tau * sin(tau * x.x()) * cos(tau * x.y()), -tau * cos(tau * x.x()) * sin(tau * x.y()));
    };
    f.jac_w = [](const Vec2& x) {
      const double t2 = tau * tau;
      Mat2 m;
      m << t2 * cos(tau * x.x()) * cos(tau * x.y()), -t2 * sin(tau * x.x()) * sin(tau * x.y()),
          t2 * sin(tau * x.x()) * sin(tau * x.y()), -t2 * cos(tau * x.x()) * cos(tau * x.y());
      return m;
    };
  } else {
    throw std::invalid_argument("vector_test_function: kind has scalar test functions");
  }
  return f;
}

/// Test functions admissible for the given boundary condition.
inline std::vector<int> admissible_indices(TestKind kind, BoundaryKind bc) {
  std::vector<int> out;
  for (int i = 0; i < catalogue_size(kind); ++i) {
    if (bc == BoundaryKind::NoSlip && kind == TestKind::Momentum && i == 1) continue;
    if (bc == BoundaryKind::NoSlip && kind == TestKind::Ampere && i == 0) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace mhdfvfe
