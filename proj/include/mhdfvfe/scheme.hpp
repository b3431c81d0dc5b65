#pragma once

// Time stepping for the two mixed schemes.
//
//   Scheme-I   triangles, rho in Qh, u in CR, B in RT0, E nodal P1
//   Scheme-II  squares,   rho in Qh, u in Qh^2, B in RT0, E nodal Q1
//
// Each step solves the coupled nonlinear system for (rho, u, E) by a
// Newton-type iteration (upwind branches frozen at the current iterate) and
// then updates B strongly: B = B_prev - dt curl E, so div_h B stays at zero
// to rounding.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef MHDFVFE_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "mhdfvfe/config.hpp"
#include "mhdfvfe/errors.hpp"
#include "mhdfvfe/fe_spaces.hpp"
#include "mhdfvfe/flux.hpp"
#include "mhdfvfe/manufactured.hpp"
#include "mhdfvfe/mesh.hpp"
#include "mhdfvfe/quadrature.hpp"

namespace mhdfvfe {

inline double pressure(const SchemeConfig& cfg, double rho) { return cfg.a * std::pow(rho, cfg.gamma); }
inline double pressure_derivative(const SchemeConfig& cfg, double rho) {
  return cfg.a * cfg.gamma * std::pow(rho, cfg.gamma - 1.0);
}
/// Pressure potential H(rho) = a rho^gamma / (gamma - 1).
inline double pressure_potential(const SchemeConfig& cfg, double rho) {
  return cfg.a * std::pow(rho, cfg.gamma) / (cfg.gamma - 1.0);
}
inline double pressure_potential_derivative(const SchemeConfig& cfg, double rho) {
  return cfg.a * cfg.gamma * std::pow(rho, cfg.gamma - 1.0) / (cfg.gamma - 1.0);
}

struct State {
  SchemeKind scheme = SchemeKind::I;
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  DiscreteField rho;     // QhScalar
  DiscreteField u;       // CR (Scheme-I) or QhVector (Scheme-II)
  DiscreteField B;       // RT0
  DiscreteField E;       // Nodal
  DiscreteField B_prev;  // magnetic field of the previous level, used in j
  DiscreteField j;       // element averages of E + u x B_prev

  const std::shared_ptr<const Mesh>& mesh() const { return rho.mesh; }
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  double continuity_residual = 0.0;
  int linear_solves = 0;
  double wall_time = 0.0;
  std::vector<double> history;
};

/// u x B_prev + E at a reference point of cell k.
inline double current_density(const State& s, int k, const quadrature::RefPoint& q) {
  return eval_scalar(s.E, k, q) + planar::cross(eval_vector(s.u, k, q), eval_vector(s.B_prev, k, q));
}

inline DiscreteField project_current(const State& s) {
  const Mesh& mesh = *s.mesh();
  DiscreteField j(Space::QhScalar, s.mesh());
  const auto rule = quadrature::exact_rule(mesh.shape());
  for (int k = 0; k < mesh.num_cells(); ++k) {
    double v = 0.0;
    for (const auto& q : rule) v += q.weight * current_density(s, k, q);
    j.dofs[k] = v;
  }
  return j;
}

inline double max_abs_div(const DiscreteField& B) { return div_h(B).dofs.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------
// Element contributions of the electromagnetic coupling
// ---------------------------------------------------------------------------

/// Local velocity shape functions of a cell: the three CR functions on a
/// triangle, or the single constant on a finite volume cell.
struct LocalVelocity {
  int count = 0;
  std::array<int, 3> dofs{};

  static LocalVelocity of(const Mesh& mesh, const DiscreteField& u, int k) {
    LocalVelocity lv;
    if (u.space == Space::CR) {
      lv.count = 3;
      for (int i = 0; i < 3; ++i) lv.dofs[i] = mesh.cell(k).faces[i];
    } else {
      lv.count = 1;
      lv.dofs[0] = k;
    }
    return lv;
  }
  static LocalVelocity of(const Mesh& mesh, Space space, int k) {
    DiscreteField dummy;
    dummy.space = space;
    return of(mesh, dummy, k);
  }
  std::array<double, 3> values(const quadrature::RefPoint& q) const {
    if (count == 3) return basis::cr(q);
    return {1.0, 0.0, 0.0};
  }
};

/// Element matrices of the planar Maxwell block on cell k, with g = (B2, -B1)
/// of the frozen field so that v x B = v . g:
///   M(a,b) = int N_a N_b                S(a,b) = int grad N_a . grad N_b
///   C(a, 2i+c) = int N_a phi_i g_c      L(2i+c, 2j+c') = int phi_i phi_j g_c g_c'
///   b(a) = int B . curl N_a
struct ElementEM {
  int nv = 0;
  int nu = 0;
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d S = Eigen::Matrix4d::Zero();
  Eigen::Matrix<double, 4, 6> C = Eigen::Matrix<double, 4, 6>::Zero();
  Eigen::Matrix<double, 6, 6> L = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Vector4d b = Eigen::Vector4d::Zero();
};

inline ElementEM element_em(const Mesh& mesh, int k, const DiscreteField& B_frozen,
                            const LocalVelocity& lv) {
  const Cell& c = mesh.cell(k);
  ElementEM e;
  e.nv = c.num_vertices;
  e.nu = lv.count;
  const auto rule = quadrature::exact_rule(mesh.shape());
  for (const auto& q : rule) {
    const double w = q.weight * c.measure;
    const auto N = basis::nodal(mesh.shape(), q);
    const auto dN = basis::nodal_gradients(c, mesh.shape(), q);
    const auto phi = lv.values(q);
    const Vec2 B = eval_vector(B_frozen, k, q);
    const Vec2 g(B.y(), -B.x());
    for (int a = 0; a < e.nv; ++a) {
      e.b[a] += w * B.dot(rotate_cw(dN[a]));
      for (int bb = 0; bb < e.nv; ++bb) {
        e.M(a, bb) += w * N[a] * N[bb];
        e.S(a, bb) += w * dN[a].dot(dN[bb]);
      }
      for (int i = 0; i < e.nu; ++i)
        for (int cc = 0; cc < 2; ++cc) e.C(a, 2 * i + cc) += w * N[a] * phi[i] * g[cc];
    }
    for (int i = 0; i < e.nu; ++i)
      for (int ci = 0; ci < 2; ++ci)
        for (int jj = 0; jj < e.nu; ++jj)
          for (int cj = 0; cj < 2; ++cj)
            e.L(2 * i + ci, 2 * jj + cj) += w * phi[i] * phi[jj] * g[ci] * g[cj];
  }
  return e;
}

inline bool wall_bounded(const SchemeConfig& cfg) { return cfg.bc == BoundaryKind::NoSlip; }

/// Electric field and updated magnetic field for a given velocity:
///   int E psi + dt int curl E . curl psi = int B_prev . curl psi - int (u x B_prev) psi
/// followed by B = B_prev - dt curl E. Walls carry E = 0.
inline std::pair<DiscreteField, DiscreteField> solve_EB_subsystem(const DiscreteField& u,
                                                                  const DiscreteField& B_prev,
                                                                  double dt,
                                                                  const SchemeConfig& cfg) {
  require_space(B_prev, Space::RT0, "solve_EB_subsystem");
  if (u.space != Space::CR && u.space != Space::QhVector)
    throw SpaceMismatch("solve_EB_subsystem: velocity must be CR or QhVector");
  const auto& mesh_ptr = B_prev.mesh;
  const Mesh& mesh = *mesh_ptr;
  const int nv = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
  const bool walls = wall_bounded(cfg) && !mesh.periodic();
  for (int k = 0; k < mesh.num_cells(); ++k) {
    const Cell& c = mesh.cell(k);
    const auto lv = LocalVelocity::of(mesh, u, k);
    const auto e = element_em(mesh, k, B_prev, lv);
    Eigen::Matrix<double, 6, 1> uloc = Eigen::Matrix<double, 6, 1>::Zero();
    for (int i = 0; i < lv.count; ++i) uloc.segment<2>(2 * i) = u.dofs.segment<2>(2 * lv.dofs[i]);
    for (int a = 0; a < e.nv; ++a) {
      const int A = c.vertices[a];
      if (walls && mesh.boundary_vertex(A)) continue;
      rhs[A] += e.b[a] - e.C.row(a).head(2 * e.nu).dot(uloc.head(2 * e.nu));
      for (int bb = 0; bb < e.nv; ++bb) {
        const int Bv = c.vertices[bb];
        if (walls && mesh.boundary_vertex(Bv)) continue;
        trip.emplace_back(A, Bv, e.M(a, bb) + dt * e.S(a, bb));
      }
    }
  }
  if (walls)
    for (int v = 0; v < nv; ++v)
      if (mesh.boundary_vertex(v)) trip.emplace_back(v, v, 1.0);
  Eigen::SparseMatrix<double> A(nv, nv);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SolverError("electric field system factorization failed", 0.0, 0);
  DiscreteField E(Space::Nodal, mesh_ptr, ldlt.solve(rhs));
  const double res = (A * E.dofs - rhs).norm() / std::max(1.0, rhs.norm());
  if (!(res <= std::max(cfg.linear_tol, 1e-11)))
    throw SolverError("electric field solve did not reach the linear tolerance", res, 1);
  DiscreteField B(Space::RT0, mesh_ptr, B_prev.dofs - dt * curl_vector(E).dofs);
  return {E, B};
}

/// Sparse LU used for the coupled Jacobian: UMFPACK when available, otherwise
/// Eigen's supernodal LU.
#ifdef MHDFVFE_HAVE_UMFPACK
using JacobianLU = Eigen::UmfPackLU<Eigen::SparseMatrix<double>>;
#else
using JacobianLU = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
#endif

// ---------------------------------------------------------------------------
// Coupled nonlinear system for one time level
// ---------------------------------------------------------------------------

namespace detail {

using Combination = std::vector<std::pair<int, double>>;

/// Residual and Jacobian of the discrete continuity, momentum and Ampere
/// equations. Unknowns: [rho (cells) | u (2 per velocity dof) | E (vertices)].
class CoupledSystem {
 public:
  CoupledSystem(const State& prev, const SchemeConfig& cfg, double dt)
      : prev_(prev), cfg_(cfg), dt_(dt), mesh_(*prev.mesh()) {
    const Mesh& m = mesh_;
    fv_ = prev.u.space == Space::QhVector;
    nc_ = m.num_cells();
    nu_ = fv_ ? m.num_cells() : m.num_faces();
    nv_ = m.num_vertices();
    off_u_ = nc_;
    off_E_ = nc_ + 2 * nu_;
    he_ = std::pow(m.h(), cfg.eps);
    dirichlet_.assign(static_cast<std::size_t>(size()), false);
    if (wall_bounded(cfg) && !m.periodic()) {
      if (!fv_)
        for (int f : m.exterior_faces()) dirichlet_[u_index(f, 0)] = dirichlet_[u_index(f, 1)] = true;
      for (int v = 0; v < nv_; ++v)
        if (m.boundary_vertex(v)) dirichlet_[E_index(v)] = true;
    }
    // cell means and face normal velocities as combinations of velocity dofs
    cell_mean_.resize(nc_);
    for (int k = 0; k < nc_; ++k) {
      if (fv_) cell_mean_[k] = {{k, 1.0}};
      else for (int i = 0; i < 3; ++i) cell_mean_[k].push_back({m.cell(k).faces[i], 1.0 / 3.0});
    }
    face_normal_.resize(m.num_faces());
    for (int f : m.interior_faces()) {
      const Face& face = m.face(f);
      if (fv_) face_normal_[f] = {{face.owner, 0.5}, {face.neighbor, 0.5}};
      else face_normal_[f] = {{f, 1.0}};
    }
    uhat_prev_.resize(nc_);
    for (int k = 0; k < nc_; ++k) {
      Vec2 s = Vec2::Zero();
      for (auto [d, w] : cell_mean_[k]) s += w * prev.u.dofs.segment<2>(2 * d);
      uhat_prev_[k] = s;
    }
    em_.reserve(nc_);
    for (int k = 0; k < nc_; ++k) em_.push_back(element_em(m, k, prev.B, LocalVelocity::of(m, prev.u, k)));
    if (fv_) {
      div_.resize(nc_);
      for (int k = 0; k < nc_; ++k) {
        const Cell& c = m.cell(k);
        for (int i = 0; i < 4; ++i) {
          const Face& face = m.face(c.faces[i]);
          if (!face.interior()) continue;
          const double s = c.orientation[i] * face.measure / c.measure;
          for (auto [d, w] : face_normal_[c.faces[i]])
            for (int cc = 0; cc < 2; ++cc) div_[k].push_back({u_index(d, cc), s * w * face.normal[cc]});
        }
      }
    }
    // row scales for the relative residual
    row_scale_ = Eigen::VectorXd::Ones(size());
  }

  int size() const { return nc_ + 2 * nu_ + nv_; }
  int u_index(int d, int c) const { return off_u_ + 2 * d + c; }
  int E_index(int v) const { return off_E_ + v; }
  int rho_count() const { return nc_; }

  Eigen::VectorXd pack(const DiscreteField& rho, const DiscreteField& u, const DiscreteField& E) const {
    Eigen::VectorXd x(size());
    x.head(nc_) = rho.dofs;
    x.segment(off_u_, 2 * nu_) = u.dofs;
    x.tail(nv_) = E.dofs;
    for (int r = 0; r < size(); ++r)
      if (dirichlet_[r]) x[r] = 0.0;
    return x;
  }

  /// Residual R(x) and, if requested, the Jacobian triplets.
  void assemble(const Eigen::VectorXd& x, Eigen::VectorXd& R,
                std::vector<Eigen::Triplet<double>>* J) const {
    R = Eigen::VectorXd::Zero(size());
    if (J) J->clear();
    auto add = [&](int row, int col, double v) {
      if (J && !dirichlet_[row]) J->emplace_back(row, col, v);
    };
    const Mesh& m = mesh_;
    auto rho = [&](int k) { return x[k]; };
    auto uhat = [&](int k) {
      Vec2 s = Vec2::Zero();
      for (auto [d, w] : cell_mean_[k]) s += w * x.segment<2>(u_index(d, 0));
      return s;
    };
    // momentum contributions at cell-mean level, tested with the cell means
    // of the velocity test functions
    auto cell_res = [&](int k, int c, double v) {
      for (auto [d, w] : cell_mean_[k]) R[u_index(d, c)] += w * v;
    };
    auto cell_jac = [&](int k, int c, int col, double v) {
      for (auto [d, w] : cell_mean_[k]) add(u_index(d, c), col, w * v);
    };

    // time derivatives
    for (int k = 0; k < nc_; ++k) {
      const double area = m.cell(k).measure;
      R[k] += area * (rho(k) - prev_.rho.dofs[k]) / dt_;
      add(k, k, area / dt_);
      const Vec2 uk = uhat(k);
      for (int c = 0; c < 2; ++c) {
        cell_res(k, c, area * (rho(k) * uk[c] - prev_.rho.dofs[k] * uhat_prev_[k][c]) / dt_);
        cell_jac(k, c, k, area * uk[c] / dt_);
        for (auto [d, w] : cell_mean_[k]) cell_jac(k, c, u_index(d, c), area * rho(k) * w / dt_);
      }
    }

    // upwind fluxes with artificial diffusion
    for (int f : m.interior_faces()) {
      const Face& face = m.face(f);
      const int K = face.owner, L = face.neighbor;
      double us = 0.0;
      for (auto [d, w] : face_normal_[f]) us += w * x.segment<2>(u_index(d, 0)).dot(face.normal);
      const auto alpha = flux_coefficients(us, he_);
      const double H = us >= 0.0 ? 1.0 : 0.0;
      const double len = face.measure;

      const double F = rho(K) * alpha.in + rho(L) * alpha.out;
      R[K] += len * F;
      R[L] -= len * F;
      const double dF_du = rho(K) * H + rho(L) * (1.0 - H);
      for (int side = 0; side < 2; ++side) {
        const int row = side == 0 ? K : L;
        const double sg = side == 0 ? 1.0 : -1.0;
        add(row, K, sg * len * alpha.in);
        add(row, L, sg * len * alpha.out);
        for (auto [d, w] : face_normal_[f])
          for (int c = 0; c < 2; ++c) add(row, u_index(d, c), sg * len * dF_du * w * face.normal[c]);
      }

      const Vec2 uK = uhat(K), uL = uhat(L);
      for (int c = 0; c < 2; ++c) {
        const double Fm = rho(K) * uK[c] * alpha.in + rho(L) * uL[c] * alpha.out;
        const double dFm_du = rho(K) * uK[c] * H + rho(L) * uL[c] * (1.0 - H);
        for (int side = 0; side < 2; ++side) {
          const int cell = side == 0 ? K : L;
          const double sg = side == 0 ? 1.0 : -1.0;
          cell_res(cell, c, sg * len * Fm);
          cell_jac(cell, c, K, sg * len * uK[c] * alpha.in);
          cell_jac(cell, c, L, sg * len * uL[c] * alpha.out);
          for (auto [d, w] : cell_mean_[K]) cell_jac(cell, c, u_index(d, c), sg * len * rho(K) * alpha.in * w);
          for (auto [d, w] : cell_mean_[L]) cell_jac(cell, c, u_index(d, c), sg * len * rho(L) * alpha.out * w);
          for (auto [d, w] : face_normal_[f])
            for (int cc = 0; cc < 2; ++cc)
              cell_jac(cell, c, u_index(d, cc), sg * len * dFm_du * w * face.normal[cc]);
        }
      }
    }

    if (fv_) assemble_finite_volume_terms(x, R, add);
    else assemble_crouzeix_raviart_terms(x, R, add);
    assemble_electromagnetic_terms(x, R, add);

    for (int r = 0; r < size(); ++r)
      if (dirichlet_[r]) {
        R[r] = x[r];
        if (J) J->emplace_back(r, r, 1.0);
      }
  }

  /// Largest row residual relative to the size of its diagonal term and the
  /// field magnitude. Also returns the continuity part separately.
  double scaled_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& R,
                         double* continuity = nullptr) const {
    const Mesh& m = mesh_;
    const double rho_mag = std::max(1.0, x.head(nc_).cwiseAbs().maxCoeff());
    const double u_mag = std::max(1.0, nu_ ? x.segment(off_u_, 2 * nu_).cwiseAbs().maxCoeff() : 0.0);
    const double E_mag = std::max(1.0, x.tail(nv_).cwiseAbs().maxCoeff());
    double rc = 0.0, ru = 0.0, re = 0.0;
    for (int k = 0; k < nc_; ++k) rc = std::max(rc, std::abs(R[k]) / (m.cell(k).measure / dt_) / rho_mag);
    Eigen::VectorXd mass_u = Eigen::VectorXd::Zero(nu_);
    for (int k = 0; k < nc_; ++k)
      for (auto [d, w] : cell_mean_[k]) mass_u[d] += w * m.cell(k).measure * std::abs(x[k]) / dt_;
    for (int d = 0; d < nu_; ++d)
      for (int c = 0; c < 2; ++c)
        ru = std::max(ru, std::abs(R[u_index(d, c)]) / std::max(mass_u[d], 1e-300) / u_mag);
    Eigen::VectorXd lumped = Eigen::VectorXd::Zero(nv_);
    for (int k = 0; k < nc_; ++k) {
      const Cell& c = m.cell(k);
      for (int a = 0; a < c.num_vertices; ++a) lumped[c.vertices[a]] += c.measure / c.num_vertices;
    }
    for (int v = 0; v < nv_; ++v) re = std::max(re, std::abs(R[E_index(v)]) / lumped[v] / E_mag);
    if (continuity) *continuity = rc;
    return std::max({rc, ru, re});
  }

 private:
  template <class Add>
  void assemble_crouzeix_raviart_terms(const Eigen::VectorXd& x, Eigen::VectorXd& R, Add& add) const {
    const Mesh& m = mesh_;
    const double mu = cfg_.mu, nu = cfg_.nu();
    for (int k = 0; k < nc_; ++k) {
      const Cell& c = m.cell(k);
      const double area = c.measure;
      const auto G = basis::cr_gradients(c);
      std::array<Vec2, 3> U;
      for (int i = 0; i < 3; ++i) U[i] = x.segment<2>(u_index(c.faces[i], 0));
      double div = 0.0;
      for (int i = 0; i < 3; ++i) div += G[i].dot(U[i]);
      const double p = pressure(cfg_, x[k]);
      const double dp = pressure_derivative(cfg_, x[k]);
      for (int i = 0; i < 3; ++i)
        for (int ci = 0; ci < 2; ++ci) {
          const int row = u_index(c.faces[i], ci);
          for (int jj = 0; jj < 3; ++jj) {
            const double vis = mu * area * G[i].dot(G[jj]);
            R[row] += vis * U[jj][ci];
            add(row, u_index(c.faces[jj], ci), vis);
            for (int cj = 0; cj < 2; ++cj) add(row, u_index(c.faces[jj], cj), nu * area * G[i][ci] * G[jj][cj]);
          }
          R[row] += nu * area * div * G[i][ci] - area * p * G[i][ci];
          add(row, k, -area * dp * G[i][ci]);
        }
    }
  }

  template <class Add>
  void assemble_finite_volume_terms(const Eigen::VectorXd& x, Eigen::VectorXd& R, Add& add) const {
    const Mesh& m = mesh_;
    const double mu = cfg_.mu, nu = cfg_.nu();
    auto q_value = [&](int k) {
      double div = 0.0;
      for (auto [col, w] : div_[k]) div += w * x[col];
      return pressure(cfg_, x[k]) - nu * div;
    };
    for (int k = 0; k < nc_; ++k) {
      const Cell& c = m.cell(k);
      const double qK = q_value(k);
      for (int i = 0; i < 4; ++i) {
        const Face& face = m.face(c.faces[i]);
        const Vec2 nK = c.orientation[i] * face.normal;
        const double len = face.measure;
        const double coef = mu * len / face.cell_distance;
        const int L = face.interior() ? (face.owner == k ? face.neighbor : face.owner) : -1;
        for (int cc = 0; cc < 2; ++cc) {
          const int row = u_index(k, cc);
          // -mu [[u]] / d_sigma
          const double uout = L >= 0 ? x[u_index(L, cc)] : 0.0;
          R[row] += -coef * (uout - x[row]);
          add(row, row, coef);
          if (L >= 0) add(row, u_index(L, cc), -coef);
          // <p - nu div u> n
          const double wK = L >= 0 ? 0.5 : 1.0;
          const double qavg = L >= 0 ? 0.5 * (qK + q_value(L)) : qK;
          R[row] += len * qavg * nK[cc];
          for (int side = 0; side < (L >= 0 ? 2 : 1); ++side) {
            const int cell = side == 0 ? k : L;
            const double w = side == 0 ? wK : 0.5;
            add(row, cell, len * w * nK[cc] * pressure_derivative(cfg_, x[cell]));
            for (auto [col, dw] : div_[cell]) add(row, col, -len * w * nK[cc] * nu * dw);
          }
        }
      }
    }
  }

  template <class Add>
  void assemble_electromagnetic_terms(const Eigen::VectorXd& x, Eigen::VectorXd& R, Add& add) const {
    const Mesh& m = mesh_;
    for (int k = 0; k < nc_; ++k) {
      const Cell& c = m.cell(k);
      const ElementEM& e = em_[k];
      const auto lv = fv_ ? LocalVelocity::of(m, Space::QhVector, k) : LocalVelocity::of(m, Space::CR, k);
      Eigen::Matrix<double, 6, 1> uloc = Eigen::Matrix<double, 6, 1>::Zero();
      std::array<int, 6> ucol{};
      for (int i = 0; i < lv.count; ++i)
        for (int cc = 0; cc < 2; ++cc) {
          ucol[2 * i + cc] = u_index(lv.dofs[i], cc);
          uloc[2 * i + cc] = x[ucol[2 * i + cc]];
        }
      Eigen::Vector4d eloc = Eigen::Vector4d::Zero();
      for (int a = 0; a < e.nv; ++a) eloc[a] = x[E_index(c.vertices[a])];
      const int nu2 = 2 * e.nu;
      // momentum: int j (v x B_prev) with j = E + u x B_prev
      for (int r = 0; r < nu2; ++r) {
        R[ucol[r]] += e.L.row(r).head(nu2).dot(uloc.head(nu2)) + e.C.col(r).head(e.nv).dot(eloc.head(e.nv));
        for (int s = 0; s < nu2; ++s) add(ucol[r], ucol[s], e.L(r, s));
        for (int a = 0; a < e.nv; ++a) add(ucol[r], E_index(c.vertices[a]), e.C(a, r));
      }
      // Ampere with B eliminated through Faraday
      for (int a = 0; a < e.nv; ++a) {
        const int row = E_index(c.vertices[a]);
        R[row] += (e.M.row(a).head(e.nv) + dt_ * e.S.row(a).head(e.nv)).dot(eloc.head(e.nv)) +
                  e.C.row(a).head(nu2).dot(uloc.head(nu2)) - e.b[a];
        for (int bb = 0; bb < e.nv; ++bb) add(row, E_index(c.vertices[bb]), e.M(a, bb) + dt_ * e.S(a, bb));
        for (int s = 0; s < nu2; ++s) add(row, ucol[s], e.C(a, s));
      }
    }
  }

  const State& prev_;
  const SchemeConfig& cfg_;
  double dt_;
  const Mesh& mesh_;
  bool fv_ = false;
  int nc_ = 0, nu_ = 0, nv_ = 0, off_u_ = 0, off_E_ = 0;
  double he_ = 1.0;
  std::vector<bool> dirichlet_;
  std::vector<Combination> cell_mean_;
  std::vector<Combination> face_normal_;
  std::vector<Vec2> uhat_prev_;
  std::vector<ElementEM> em_;
  std::vector<Combination> div_;
  Eigen::VectorXd row_scale_;
};

}  // namespace detail

/// Residual of the nonlinear system at a candidate new level (used by tests
/// and diagnostics to relate identities to solver accuracy).
inline double nonlinear_residual(const State& prev, const State& cur, const SchemeConfig& cfg,
                                 double* continuity = nullptr) {
  detail::CoupledSystem sys(prev, cfg, cur.dt);
  const Eigen::VectorXd x = sys.pack(cur.rho, cur.u, cur.E);
  Eigen::VectorXd R;
  sys.assemble(x, R, nullptr);
  return sys.scaled_residual(x, R, continuity);
}

inline std::pair<State, SolveReport> advance(const State& prev, const SchemeConfig& cfg, double dt) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::CoupledSystem sys(prev, cfg, dt);
  Eigen::VectorXd x = sys.pack(prev.rho, prev.u, prev.E);
  Eigen::VectorXd R;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> J(sys.size(), sys.size());
  JacobianLU lu;
  bool analyzed = false, fresh = false;
  SolveReport rep;

  sys.assemble(x, R, &trip);
  double res = sys.scaled_residual(x, R, &rep.continuity_residual);
  rep.history.push_back(res);
  while (!(res <= cfg.picard_tol)) {
    if (rep.iterations >= cfg.picard_max_iter)
      throw SolverError("nonlinear iteration did not converge in " + std::to_string(rep.iterations) +
                            " iterations",
                        res, rep.iterations);
    // the factorization is reused while the residual contracts fast enough
    const std::size_t h = rep.history.size();
    const bool slow = h >= 2 && rep.history[h - 1] > 0.1 * rep.history[h - 2];
    if (!fresh || slow) {
      J.setFromTriplets(trip.begin(), trip.end());
      if (!analyzed) {
        lu.analyzePattern(J);
        analyzed = true;
      }
      lu.factorize(J);
      if (lu.info() != Eigen::Success) throw SolverError("Jacobian factorization failed", res, rep.iterations);
      fresh = true;
    }
    const Eigen::VectorXd delta = lu.solve(R);
    ++rep.linear_solves;
    if (!delta.allFinite()) throw SolverError("linear solve produced non-finite values", res, rep.iterations);
    // keep the density positive while iterating
    double theta = cfg.picard_damping;
    Eigen::VectorXd trial = x - theta * delta;
    for (int cut = 0; cut < 40 && trial.head(sys.rho_count()).minCoeff() <= 0.0; ++cut) {
      theta *= 0.5;
      trial = x - theta * delta;
    }
    x = trial;
    ++rep.iterations;
    sys.assemble(x, R, &trip);
    res = sys.scaled_residual(x, R, &rep.continuity_residual);
    rep.history.push_back(res);
    if (!std::isfinite(res)) throw SolverError("nonlinear iteration produced non-finite values", res, rep.iterations);
  }
  rep.residual = res;

  State next = prev;
  next.step = prev.step + 1;
  next.t = prev.t + dt;
  next.dt = dt;
  const int nc = sys.rho_count();
  next.rho.dofs = x.head(nc);
  next.u.dofs = x.segment(nc, prev.u.dofs.size());
  next.E.dofs = x.tail(prev.E.dofs.size());
  next.B_prev = prev.B;
  next.B.dofs = prev.B.dofs - dt * curl_vector(next.E).dofs;
  next.j = project_current(next);
  if (!(next.rho.dofs.minCoeff() > 0.0))
    throw SolverError("density lost positivity after a converged step", res, rep.iterations);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(next), rep};
}

inline std::pair<State, SolveReport> step_scheme1(const State& prev, const SchemeConfig& cfg, double dt) {
  if (prev.scheme != SchemeKind::I || prev.u.space != Space::CR)
    throw SpaceMismatch("step_scheme1 needs a Scheme-I state");
  return advance(prev, cfg, dt);
}

inline std::pair<State, SolveReport> step_scheme2(const State& prev, const SchemeConfig& cfg, double dt) {
  if (prev.scheme != SchemeKind::II || prev.u.space != Space::QhVector)
    throw SpaceMismatch("step_scheme2 needs a Scheme-II state");
  return advance(prev, cfg, dt);
}

// ---------------------------------------------------------------------------
// Initialization and driver
// ---------------------------------------------------------------------------

inline std::shared_ptr<const Mesh> make_mesh(const SchemeConfig& cfg, int n) {
  const bool periodic = cfg.bc == BoundaryKind::Periodic;
  return std::make_shared<const Mesh>(cfg.scheme == SchemeKind::I ? build_tri_mesh(n, periodic)
                                                                  : build_rect_mesh(n, periodic));
}

namespace detail {

inline State init_common(const NamedCase& data, std::shared_ptr<const Mesh> mesh, const SchemeConfig& cfg) {
  State s;
  s.scheme = cfg.scheme;
  s.rho = project_Q(mesh, data.rho0);
  if (!(s.rho.dofs.minCoeff() > 0.0)) throw ConfigError("initial density must be positive");
  s.B = interp_RT_potential(mesh, data.B_const, data.potential);
  if (cfg.bc == BoundaryKind::NoSlip)
    for (int f : mesh->exterior_faces())
      if (std::abs(s.B.dofs[f]) > 1e-12)
        throw ConfigError("initial magnetic field is not tangential to the walls");
  const double div = max_abs_div(s.B);
  if (!(div <= 1e-12)) throw ConfigError("initial magnetic field is not discretely divergence free");
  s.E = DiscreteField(Space::Nodal, mesh);
  s.B_prev = s.B;
  return s;
}

}  // namespace detail

inline State init_state_scheme1(const NamedCase& data, std::shared_ptr<const Mesh> mesh, const SchemeConfig& cfg) {
  if (mesh->shape() != CellShape::Triangle) throw SpaceMismatch("Scheme-I runs on triangles");
  SchemeConfig c = cfg;
  c.scheme = SchemeKind::I;
  State s = detail::init_common(data, mesh, c);
  s.u = interp_CR(mesh, data.u0);
  if (cfg.bc == BoundaryKind::NoSlip)
    for (int f : mesh->exterior_faces()) s.u.dofs.segment<2>(2 * f).setZero();
  s.j = project_current(s);
  return s;
}

inline State init_state_scheme2(const NamedCase& data, std::shared_ptr<const Mesh> mesh, const SchemeConfig& cfg) {
  if (mesh->shape() != CellShape::Rectangle) throw SpaceMismatch("Scheme-II runs on rectangles");
  SchemeConfig c = cfg;
  c.scheme = SchemeKind::II;
  State s = detail::init_common(data, mesh, c);
  s.u = project_Q(mesh, data.u0);
  s.j = project_current(s);
  return s;
}

inline State init_state(const NamedCase& data, std::shared_ptr<const Mesh> mesh, const SchemeConfig& cfg) {
  return cfg.scheme == SchemeKind::I ? init_state_scheme1(data, mesh, cfg) : init_state_scheme2(data, mesh, cfg);
}

struct RunResult {
  std::vector<State> trajectory;  // levels 0..N (fewer on failure)
  std::vector<SolveReport> reports;
  TimeGrid grid;
  std::optional<std::string> failure;
  bool ok() const { return !failure.has_value(); }
};

using StepObserver = std::function<void(const State& prev, const State& cur, const SolveReport&)>;

/// Runs the configured case from t = 0 to T. Step failures stop the run and
/// keep the partial trajectory.
inline RunResult run(const SchemeConfig& cfg, const NamedCase& data, std::optional<int> n_override = std::nullopt,
                     const StepObserver& observer = {}) {
  validate(cfg);
  if (!data.admits(cfg.bc)) throw ConfigError("case '" + data.id + "' does not admit " + to_string(cfg.bc));
  SchemeConfig c = cfg;
  if (n_override) c.n = *n_override;
  RunResult out;
  out.grid = time_grid(c);
  auto mesh = make_mesh(c, c.n);
  out.trajectory.push_back(init_state(data, mesh, c));
  out.trajectory.back().dt = out.grid.dt;
  for (int k = 1; k <= out.grid.steps; ++k) {
    try {
      auto [next, rep] = advance(out.trajectory.back(), c, out.grid.dt);
      next.t = k * out.grid.dt;
      if (observer) observer(out.trajectory.back(), next, rep);
      out.trajectory.push_back(std::move(next));
      out.reports.push_back(rep);
    } catch (const SolverError& e) {
      out.failure = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return out;
}

inline RunResult run(const SchemeConfig& cfg) { return run(cfg, get_case(cfg.case_id)); }

}  // namespace mhdfvfe
