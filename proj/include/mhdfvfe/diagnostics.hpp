#pragma once

// Conserved quantities, energy budget, norm monitors, the renormalized
// continuity residual, the relative energy, consistency residuals and
// convergence orders.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhdfvfe/config.hpp"
#include "mhdfvfe/fe_spaces.hpp"
#include "mhdfvfe/flux.hpp"
#include "mhdfvfe/manufactured.hpp"
#include "mhdfvfe/scheme.hpp"

namespace mhdfvfe {

inline void require_same_mesh(const State& a, const State& b) {
  if (a.mesh() != b.mesh() && (a.mesh()->num_cells() != b.mesh()->num_cells() ||
                               a.mesh()->shape() != b.mesh()->shape()))
    throw std::invalid_argument("states live on different meshes");
  if (a.u.space != b.u.space) throw SpaceMismatch("states carry different velocity spaces");
}

inline double total_mass(const State& s) {
  const Mesh& m = *s.mesh();
  double total = 0.0;
  for (int k = 0; k < m.num_cells(); ++k) total += m.cell(k).measure * s.rho.dofs[k];
  return total;
}

/// Cell means of the velocity (identity for finite volume velocities).
inline DiscreteField cell_velocity(const State& s) { return s.u.space == Space::CR ? hat(s.u) : s.u; }

/// Discrete velocity gradient: the element gradient for CR, the face-average
/// (Green-Gauss) gradient for piecewise constants.
inline std::vector<Mat2> velocity_gradient(const State& s) {
  if (s.u.space == Space::CR) return grad_h(s.u);
  const Mesh& m = *s.mesh();
  std::vector<Mat2> g(m.num_cells(), Mat2::Zero());
  for (int k = 0; k < m.num_cells(); ++k) {
    const Cell& c = m.cell(k);
    for (int i = 0; i < m.faces_per_cell(); ++i) {
      const Face& f = m.face(c.faces[i]);
      Vec2 avg = 0.5 * s.u.cell_vector(k);
      if (f.interior()) avg += 0.5 * s.u.cell_vector(f.owner == k ? f.neighbor : f.owner);
      g[k] += f.measure * avg * (c.orientation[i] * f.normal).transpose() / c.measure;
    }
  }
  return g;
}

/// mu-weighted viscous dissipation mu ||grad_h u||^2 of the scheme.
inline double viscous_dissipation(const State& s, const SchemeConfig& cfg) {
  const Mesh& m = *s.mesh();
  double total = 0.0;
  if (s.u.space == Space::CR) {
    const auto g = grad_h(s.u);
    for (int k = 0; k < m.num_cells(); ++k) total += m.cell(k).measure * g[k].squaredNorm();
  } else {
    // finite volume: sum |s| / d_s |[[u]]|^2 with u = 0 outside walls
    for (int f = 0; f < m.num_faces(); ++f) {
      const Face& face = m.face(f);
      const Vec2 out = face.interior() ? s.u.cell_vector(face.neighbor) : Vec2::Zero();
      total += face.measure / face.cell_distance * (out - s.u.cell_vector(face.owner)).squaredNorm();
    }
  }
  return cfg.mu * total;
}

inline double l2_squared(const DiscreteField& q) {
  const Mesh& m = *q.mesh;
  double total = 0.0;
  for (int k = 0; k < m.num_cells(); ++k) total += m.cell(k).measure * q.dofs[k] * q.dofs[k];
  return total;
}

inline double current_l2_squared(const State& s) {
  const Mesh& m = *s.mesh();
  const auto rule = quadrature::exact_rule(m.shape());
  return integrate(m, rule, [&](int k, const auto& q) { return std::pow(current_density(s, k, q), 2); });
}

/// Terms of the discrete energy inequality between two consecutive levels.
/// Dissipation entries are rates; budget_residual is
/// E^k - E^{k-1} + dt (sum of all dissipation entries), which is <= 0 up to
/// the nonlinear solver tolerance.
struct EnergyBudget {
  double kinetic = 0.0;
  double internal = 0.0;
  double magnetic = 0.0;
  double total = 0.0;
  double diss_visc = 0.0;
  double diss_div = 0.0;
  double diss_j = 0.0;
  double numdiss_dtu = 0.0;
  double numdiss_dtB = 0.0;
  double numdiss_face = 0.0;
  double internal_residual = 0.0;  // D_t int H + int p div u, <= 0
  double budget_residual = 0.0;
  double kinetic_balance = 0.0;   // signed defect of the kinetic energy balance
  double magnetic_balance = 0.0;  // signed defect of the magnetic energy balance
};

struct EnergyParts {
  double kinetic = 0.0, internal = 0.0, magnetic = 0.0;
  double total() const { return kinetic + internal + magnetic; }
};

inline EnergyParts energy(const State& s, const SchemeConfig& cfg) {
  const Mesh& m = *s.mesh();
  const DiscreteField uh = cell_velocity(s);
  EnergyParts e;
  for (int k = 0; k < m.num_cells(); ++k) {
    const double area = m.cell(k).measure;
    e.kinetic += 0.5 * area * s.rho.dofs[k] * uh.cell_vector(k).squaredNorm();
    e.internal += area * pressure_potential(cfg, s.rho.dofs[k]);
  }
  e.magnetic = 0.5 * std::pow(l2_norm(s.B), 2);
  return e;
}

inline EnergyBudget energy_budget(const State& prev, const State& cur, const SchemeConfig& cfg) {
  require_same_mesh(prev, cur);
  const Mesh& m = *cur.mesh();
  const double dt = cur.dt;
  if (!(dt > 0)) throw std::invalid_argument("energy_budget: current state has no time step");
  const auto e0 = energy(prev, cfg);
  const auto e1 = energy(cur, cfg);
  EnergyBudget b;
  b.kinetic = e1.kinetic;
  b.internal = e1.internal;
  b.magnetic = e1.magnetic;
  b.total = e1.total();

  const DiscreteField div = div_h(cur.u);
  double p_div = 0.0;
  for (int k = 0; k < m.num_cells(); ++k)
    p_div += m.cell(k).measure * pressure(cfg, cur.rho.dofs[k]) * div.dofs[k];
  b.diss_visc = viscous_dissipation(cur, cfg);
  b.diss_div = cfg.nu() * l2_squared(div);
  b.diss_j = current_l2_squared(cur);

  const DiscreteField uh0 = cell_velocity(prev), uh1 = cell_velocity(cur);
  for (int k = 0; k < m.num_cells(); ++k)
    b.numdiss_dtu += 0.5 * dt * m.cell(k).measure * prev.rho.dofs[k] *
                     ((uh1.cell_vector(k) - uh0.cell_vector(k)) / dt).squaredNorm();
  DiscreteField dB(Space::RT0, cur.mesh(), (cur.B.dofs - prev.B.dofs) / dt);
  b.numdiss_dtB = 0.5 * dt * std::pow(l2_norm(dB), 2);
  const double he = std::pow(m.h(), cfg.eps);
  for (int f : m.interior_faces()) {
    const Face& face = m.face(f);
    const double us = face_velocity(cur.u, f);
    const double rK = cur.rho.dofs[face.owner], rL = cur.rho.dofs[face.neighbor];
    const Vec2 jump = uh1.cell_vector(face.neighbor) - uh1.cell_vector(face.owner);
    b.numdiss_face += face.measure * (0.5 * upwind_value(rK, rL, us) * std::abs(us) + he * 0.5 * (rK + rL)) *
                      jump.squaredNorm();
  }
  b.internal_residual = (e1.internal - e0.internal) / dt + p_div;

  // int j E (exact quadrature)
  const auto rule = quadrature::exact_rule(m.shape());
  const double jE = integrate(m, rule, [&](int k, const auto& q) {
    return current_density(cur, k, q) * eval_scalar(cur.E, k, q);
  });
  b.kinetic_balance = (e1.kinetic - e0.kinetic) / dt + b.diss_visc + b.diss_div - p_div + b.numdiss_dtu +
                      b.numdiss_face + b.diss_j - jE;
  b.magnetic_balance = jE + (e1.magnetic - e0.magnetic) / dt + b.numdiss_dtB;
  b.budget_residual = (e1.total() - e0.total()) +
                      dt * (b.diss_visc + b.diss_div + b.diss_j + b.numdiss_dtu + b.numdiss_dtB + b.numdiss_face);
  return b;
}

/// Defect of the renormalized continuity identity for b(rho) = rho^2:
///   int D_t rho^2 + int rho^2 div_h u
///     = -dt int |D_t rho|^2 - sum |s| [[rho]]^2 (2 h^eps + |u_s|).
inline double renorm_residual_square(const State& prev, const State& cur, const SchemeConfig& cfg) {
  require_same_mesh(prev, cur);
  const Mesh& m = *cur.mesh();
  const double dt = cur.dt;
  const DiscreteField div = div_h(cur.u);
  double lhs = 0.0, rhs = 0.0;
  for (int k = 0; k < m.num_cells(); ++k) {
    const double area = m.cell(k).measure;
    const double r1 = cur.rho.dofs[k], r0 = prev.rho.dofs[k];
    lhs += area * ((r1 * r1 - r0 * r0) / dt + r1 * r1 * div.dofs[k]);
    rhs -= dt * area * std::pow((r1 - r0) / dt, 2);
  }
  const double he = std::pow(m.h(), cfg.eps);
  for (int f : m.interior_faces()) {
    const Face& face = m.face(f);
    const double jump = cur.rho.dofs[face.neighbor] - cur.rho.dofs[face.owner];
    rhs -= face.measure * jump * jump * (2.0 * he + std::abs(face_velocity(cur.u, f)));
  }
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Norm monitors
// ---------------------------------------------------------------------------

struct MonitorNorms {
  double rho_Lgamma = 0.0;
  double momentum = 0.0;  // ||rho u_hat|| in L^{2 gamma / (gamma + 1)}
  double u_Lp = 0.0;
  double grad_u = 0.0;
  double B = 0.0;
  double j = 0.0;
  double j_cross_B = 0.0;  // L^1
  double E = 0.0;          // L^{3/2}
  double p = 0.0;          // L^1

  static std::vector<std::string> names() {
    return {"rho_Lgamma", "momentum", "u_Lp", "grad_u", "B", "j", "j_cross_B", "E", "p"};
  }
  std::vector<double> values() const { return {rho_Lgamma, momentum, u_Lp, grad_u, B, j, j_cross_B, E, p}; }
};

inline MonitorNorms monitor_norms(const State& s, const SchemeConfig& cfg) {
  const Mesh& m = *s.mesh();
  const double g = cfg.gamma;
  const double qm = 2.0 * g / (g + 1.0);
  const DiscreteField uh = cell_velocity(s);
  const auto grad = velocity_gradient(s);
  MonitorNorms r;
  double s_rho = 0, s_mom = 0, s_grad = 0, s_p = 0;
  for (int k = 0; k < m.num_cells(); ++k) {
    const double area = m.cell(k).measure;
    const double rho = s.rho.dofs[k];
    s_rho += area * std::pow(std::abs(rho), g);
    s_mom += area * std::pow((rho * uh.cell_vector(k)).norm(), qm);
    s_grad += area * grad[k].squaredNorm();
    s_p += area * std::abs(pressure(cfg, rho));
  }
  const auto rule = quadrature::smooth_rule(m.shape(), 4);
  double s_u = 0, s_j = 0, s_jb = 0, s_E = 0;
  for (int k = 0; k < m.num_cells(); ++k) {
    const double area = m.cell(k).measure;
    for (const auto& q : rule) {
      const double w = q.weight * area;
      const double jq = current_density(s, k, q);
      s_u += w * std::pow(eval_vector(s.u, k, q).norm(), cfg.p_monitor);
      s_j += w * jq * jq;
      s_jb += w * std::abs(jq) * eval_vector(s.B_prev, k, q).norm();
      s_E += w * std::pow(std::abs(eval_scalar(s.E, k, q)), 1.5);
    }
  }
  r.rho_Lgamma = std::pow(s_rho, 1.0 / g);
  r.momentum = std::pow(s_mom, 1.0 / qm);
  r.u_Lp = std::pow(s_u, 1.0 / cfg.p_monitor);
  r.grad_u = std::sqrt(s_grad);
  r.B = l2_norm(s.B);
  r.j = std::sqrt(s_j);
  r.j_cross_B = s_jb;
  r.E = std::pow(s_E, 2.0 / 3.0);
  r.p = s_p;
  return r;
}

/// Time aggregation of the monitors along a trajectory: sup in time for the
/// quantities bounded in L^infinity(0,T), L^2 in time for the others.
struct MonitorSummary {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<std::string> time_norm;
};

inline MonitorSummary summarize_monitors(const std::vector<State>& traj, const SchemeConfig& cfg) {
  MonitorSummary out;
  out.names = MonitorNorms::names();
  out.time_norm = {"sup", "sup", "L2", "L2", "sup", "L2", "L2", "L2", "sup"};
  out.values.assign(out.names.size(), 0.0);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto v = monitor_norms(traj[k], cfg).values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (out.time_norm[i] == "sup") out.values[i] = std::max(out.values[i], v[i]);
      else if (k > 0) out.values[i] += traj[k].dt * v[i] * v[i];
    }
  }
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (out.time_norm[i] == "L2") out.values[i] = std::sqrt(out.values[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Relative energy
// ---------------------------------------------------------------------------

struct RelativeEnergy {
  double value = 0.0;
  double kinetic = 0.0;   // 1/2 int rho |u - U|^2
  double magnetic = 0.0;  // 1/2 int |B - b|^2
  double pressure = 0.0;  // int H(rho) - H(r) - H'(r)(rho - r)
};

struct ReferenceFields {
  std::function<double(const Vec2&)> r;
  std::function<Vec2(const Vec2&)> U;
  std::function<Vec2(const Vec2&)> b;
};

inline RelativeEnergy relative_energy(const State& s, const ReferenceFields& ref, const SchemeConfig& cfg,
                                      int quadrature_order = 4) {
  const Mesh& m = *s.mesh();
  const auto rule = quadrature::smooth_rule(m.shape(), quadrature_order);
  RelativeEnergy e;
  for (int k = 0; k < m.num_cells(); ++k) {
    const Cell& c = m.cell(k);
    const double rho = s.rho.dofs[k];
    for (const auto& q : rule) {
      const double w = q.weight * c.measure;
      const Vec2 x = quadrature::map_point(c, m.shape(), q);
      const double r = ref.r(x);
      if (!(r > 0)) throw std::invalid_argument("relative_energy: reference density must be positive");
      e.kinetic += 0.5 * w * rho * (eval_vector(s.u, k, q) - ref.U(x)).squaredNorm();
      e.magnetic += 0.5 * w * (eval_vector(s.B, k, q) - ref.b(x)).squaredNorm();
      e.pressure += w * (pressure_potential(cfg, rho) - pressure_potential(cfg, r) -
                         pressure_potential_derivative(cfg, r) * (rho - r));
    }
  }
  e.value = e.kinetic + e.magnetic + e.pressure;
  return e;
}

/// Reference fields that evaluate the discrete state itself.
inline ReferenceFields injected_reference(const State& s) {
  auto eval_at = [&s](const Vec2& x, auto&& f) {
    const Mesh& m = *s.mesh();
    const int k = m.locate(x);
    const auto q = basis::reference_point(m.cell(k), m.shape(), m.to_cell_frame(k, x));
    return f(k, q);
  };
  ReferenceFields r;
  r.r = [&s, eval_at](const Vec2& x) {
    return eval_at(x, [&](int k, const auto&) { return s.rho.dofs[k]; });
  };
  r.U = [&s, eval_at](const Vec2& x) { return eval_at(x, [&](int k, const auto& q) { return eval_vector(s.u, k, q); }); };
  r.b = [&s, eval_at](const Vec2& x) { return eval_at(x, [&](int k, const auto& q) { return eval_vector(s.B, k, q); }); };
  return r;
}

// ---------------------------------------------------------------------------
// Consistency residuals
// ---------------------------------------------------------------------------

struct ConsistencyEntry {
  TestKind kind;
  std::string name;
  double residual = 0.0;  // absolute value of the defect
};

struct ConsistencyReport {
  double h = 0.0;
  std::vector<ConsistencyEntry> entries;
  double max_divB = 0.0;

  /// Largest residual among the test functions of one kind.
  double e(TestKind kind) const {
    double v = 0.0;
    for (const auto& en : entries)
      if (en.kind == kind) v = std::max(v, en.residual);
    return v;
  }
};

namespace detail {

/// Integral of eta over [a, b] for eta = cos^2(pi t / (2T)).
inline double eta_integral(const TimeFactor& eta, double a, double b) {
  const double T = eta.T;
  auto F = [T](double t) { return 0.5 * t + T / (2.0 * std::numbers::pi) * std::sin(std::numbers::pi * t / T); };
  return F(b) - F(a);
}

inline void check_boundary_condition(bool ok, const std::string& name, const char* what) {
  if (!ok) throw std::invalid_argument("test function " + name + " is not admissible: " + what);
}

/// Samples the boundary and checks the admissibility clause of each kind.
/// Scalar test functions are passed as (value, 0).
template <class Value>
void check_admissible(const std::string& name, TestKind kind, BoundaryKind bc, Value&& value_at) {
  const int samples = 17;
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    const std::array<std::pair<Vec2, Vec2>, 2> pairs{{{Vec2(0, s), Vec2(1, s)}, {Vec2(s, 0), Vec2(s, 1)}}};
    for (const auto& [a, b] : pairs) {
      const Vec2 n = a.x() == 0.0 && b.x() == 1.0 ? Vec2(1, 0) : Vec2(0, 1);
      const auto va = value_at(a), vb = value_at(b);
      if (bc == BoundaryKind::Periodic) {
        check_boundary_condition((va - vb).norm() <= 1e-10, name, "not periodic");
      } else if (kind == TestKind::Maxwell) {
        check_boundary_condition(std::abs(va.dot(n)) <= 1e-10 && std::abs(vb.dot(n)) <= 1e-10, name,
                                 "C . n does not vanish on the walls");
      } else {
        check_boundary_condition(va.norm() <= 1e-10 && vb.norm() <= 1e-10, name, "does not vanish on the walls");
      }
    }
  }
}

}  // namespace detail

/// Defects of the weak formulations tested with smooth functions:
///   e1 = int_0^T int (rho phi_t + rho u . grad phi) + int rho^0 phi(0)
///   e2 = int_0^T int (rho u_hat . v_t + rho u_hat (x) u : grad v + p div v - S : grad v
///                     + (j x B_prev) . v) + int rho^0 u_hat^0 . v(0)
///   e3 = int_0^T int (B . C_t - E curl C) + int B^0 . C(0)
///   e4 = int_0^T int (j psi - B . curl psi)
/// Discrete fields are constant on (t_{k-1}, t_k]; the time factor of the
/// test functions is integrated exactly.
inline ConsistencyReport consistency_residuals(const std::vector<State>& traj, const SchemeConfig& cfg, double T) {
  if (traj.size() < 2) throw std::invalid_argument("consistency_residuals: trajectory needs at least one step");
  const Mesh& m = *traj.front().mesh();
  const auto rule = quadrature::smooth_rule(m.shape(), 4);
  ConsistencyReport rep;
  rep.h = m.h();
  for (const auto& s : traj) rep.max_divB = std::max(rep.max_divB, max_abs_div(s.B));
  const double mu = cfg.mu, lam = cfg.lambda;

  auto space_integral = [&](const State& s, auto&& integrand) {
    double total = 0.0;
    for (int k = 0; k < m.num_cells(); ++k) {
      const Cell& c = m.cell(k);
      for (const auto& q : rule) total += q.weight * c.measure * integrand(s, k, q, quadrature::map_point(c, m.shape(), q));
    }
    return total;
  };
  struct StepData {
    std::vector<Mat2> grad;
    DiscreteField uh;
  };
  std::vector<StepData> data;
  for (const auto& s : traj) data.push_back({velocity_gradient(s), cell_velocity(s)});

  // continuity
  for (int idx : admissible_indices(TestKind::Continuity, cfg.bc)) {
    const auto phi = scalar_test_function(TestKind::Continuity, idx, T);
    detail::check_admissible(phi.name, TestKind::Continuity, cfg.bc, [&](const Vec2& x) { return Vec2(phi.s(x), 0.0); });
    double e = phi.eta.value(0.0) * space_integral(traj[0], [&](const State& s, int k, const auto&, const Vec2& x) {
      return s.rho.dofs[k] * phi.s(x);
    });
    for (std::size_t n = 1; n < traj.size(); ++n) {
      const double a = traj[n - 1].t, b = traj[n].t;
      const double deta = phi.eta.value(b) - phi.eta.value(a);
      const double ieta = detail::eta_integral(phi.eta, a, b);
      e += space_integral(traj[n], [&](const State& s, int k, const auto& q, const Vec2& x) {
        const double rho = s.rho.dofs[k];
        return rho * (deta * phi.s(x) + ieta * eval_vector(s.u, k, q).dot(phi.grad_s(x)));
      });
    }
    rep.entries.push_back({TestKind::Continuity, phi.name, std::abs(e)});
  }

  // momentum
  for (int idx : admissible_indices(TestKind::Momentum, cfg.bc)) {
    const auto v = vector_test_function(TestKind::Momentum, idx, T);
    detail::check_admissible(v.name, TestKind::Momentum, cfg.bc, [&](const Vec2& x) { return v.w(x); });
    double e = v.eta.value(0.0) * space_integral(traj[0], [&](const State& s, int k, const auto&, const Vec2& x) {
      return s.rho.dofs[k] * data[0].uh.cell_vector(k).dot(v.w(x));
    });
    for (std::size_t n = 1; n < traj.size(); ++n) {
      const double a = traj[n - 1].t, b = traj[n].t;
      const double deta = v.eta.value(b) - v.eta.value(a);
      const double ieta = detail::eta_integral(v.eta, a, b);
      const StepData& d = data[n];
      e += space_integral(traj[n], [&](const State& s, int k, const auto& q, const Vec2& x) {
        const double rho = s.rho.dofs[k];
        const Vec2 uh = d.uh.cell_vector(k);
        const Vec2 u = eval_vector(s.u, k, q);
        const Mat2 gw = v.jac_w(x);
        const Mat2& gu = d.grad[k];
        const double divu = gu.trace();
        const Mat2 S = mu * (gu + gu.transpose() - divu * Mat2::Identity()) + lam * divu * Mat2::Identity();
        const Vec2 jxB = planar::cross(current_density(s, k, q), eval_vector(s.B_prev, k, q));
        double conv = 0.0;
        for (int aa = 0; aa < 2; ++aa)
          for (int bb = 0; bb < 2; ++bb) conv += rho * uh[aa] * u[bb] * gw(aa, bb);
        return deta * rho * uh.dot(v.w(x)) +
               ieta * (conv + pressure(cfg, rho) * gw.trace() - (S.cwiseProduct(gw)).sum() + jxB.dot(v.w(x)));
      });
    }
    rep.entries.push_back({TestKind::Momentum, v.name, std::abs(e)});
  }

  // Maxwell
  for (int idx : admissible_indices(TestKind::Maxwell, cfg.bc)) {
    const auto C = vector_test_function(TestKind::Maxwell, idx, T);
    detail::check_admissible(C.name, TestKind::Maxwell, cfg.bc, [&](const Vec2& x) { return C.w(x); });
    double e = C.eta.value(0.0) * space_integral(traj[0], [&](const State& s, int k, const auto& q, const Vec2& x) {
      return eval_vector(s.B, k, q).dot(C.w(x));
    });
    for (std::size_t n = 1; n < traj.size(); ++n) {
      const double a = traj[n - 1].t, b = traj[n].t;
      const double deta = C.eta.value(b) - C.eta.value(a);
      const double ieta = detail::eta_integral(C.eta, a, b);
      e += space_integral(traj[n], [&](const State& s, int k, const auto& q, const Vec2& x) {
        return deta * eval_vector(s.B, k, q).dot(C.w(x)) - ieta * eval_scalar(s.E, k, q) * planar::curl_of_jacobian(C.jac_w(x));
      });
    }
    rep.entries.push_back({TestKind::Maxwell, C.name, std::abs(e)});
  }

  // Ampere
  for (int idx : admissible_indices(TestKind::Ampere, cfg.bc)) {
    const auto psi = scalar_test_function(TestKind::Ampere, idx, T);
    detail::check_admissible(psi.name, TestKind::Ampere, cfg.bc, [&](const Vec2& x) { return Vec2(psi.s(x), 0.0); });
    double e = 0.0;
    for (std::size_t n = 1; n < traj.size(); ++n) {
      const double ieta = detail::eta_integral(psi.eta, traj[n - 1].t, traj[n].t);
      e += ieta * space_integral(traj[n], [&](const State& s, int k, const auto& q, const Vec2& x) {
        return current_density(s, k, q) * psi.s(x) - eval_vector(s.B, k, q).dot(rotate_cw(psi.grad_s(x)));
      });
    }
    rep.entries.push_back({TestKind::Ampere, psi.name, std::abs(e)});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence orders
// ---------------------------------------------------------------------------

/// Experimental orders log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
inline std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size()) throw std::invalid_argument("eoc: size mismatch");
  for (double e : errors)
    if (!(e > 0)) throw std::invalid_argument("eoc: errors must be positive");
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1]) || !(hs[i] > 0)) throw std::invalid_argument("eoc: mesh sizes must decrease strictly");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
  return out;
}

/// L2 distance between a field on a coarse mesh and one on a nested fine mesh
/// (same space), integrated on the fine mesh.
inline double l2_difference(const DiscreteField& coarse, const DiscreteField& fine) {
  if (coarse.space != fine.space) throw SpaceMismatch("l2_difference: spaces differ");
  const Mesh& cm = *coarse.mesh;
  const Mesh& fm = *fine.mesh;
  const bool vec = fine.space == Space::QhVector || fine.space == Space::CR || fine.space == Space::RT0;
  const auto rule = quadrature::exact_rule(fm.shape());
  double total = 0.0;
  for (int k = 0; k < fm.num_cells(); ++k) {
    const Cell& c = fm.cell(k);
    const int K = cm.locate(c.centroid);
    for (const auto& q : rule) {
      const Vec2 x = cm.to_cell_frame(K, quadrature::map_point(c, fm.shape(), q));
      const auto qc = basis::reference_point(cm.cell(K), cm.shape(), x);
      const double d = vec ? (eval_vector(coarse, K, qc) - eval_vector(fine, k, q)).squaredNorm()
                           : std::pow(eval_scalar(coarse, K, qc) - eval_scalar(fine, k, q), 2);
      total += q.weight * c.measure * d;
    }
  }
  return std::sqrt(total);
}

}  // namespace mhdfvfe
