#pragma once

// Face velocities, upwinding and the diffusive numerical flux
//   F(r, u) = r_in [u]^+ + r_out [u]^- - h^eps (r_out - r_in).

#include <cmath>
#include <vector>

#include "mhdfvfe/errors.hpp"
#include "mhdfvfe/fe_spaces.hpp"

namespace mhdfvfe {

inline double positive_part(double f) { return 0.5 * (f + std::abs(f)); }
inline double negative_part(double f) { return 0.5 * (f - std::abs(f)); }

/// Normal velocity on an interior face. CR: the face mean dotted with n_sigma
/// (the DOF is the face mean). QhVector: average of the two cell values.
inline double face_velocity(const DiscreteField& u, int f) {
  const Face& face = u.mesh->face(f);
  switch (u.space) {
    case Space::CR: return u.face_vector(f).dot(face.normal);
    case Space::QhVector: return average_normal_velocity(u, f);
    default: throw SpaceMismatch(std::string("face_velocity: unsupported space ") + to_string(u.space));
  }
}

/// r^up u_sigma; ties (u_sigma = 0) take the owner side.
inline double upwind(double r_in, double r_out, double u_sigma) {
  return r_in * positive_part(u_sigma) + r_out * negative_part(u_sigma);
}

inline double upwind_value(double r_in, double r_out, double u_sigma) {
  return u_sigma >= 0.0 ? r_in : r_out;
}

inline void check_epsilon(double eps) {
  if (!(eps > -1.0)) throw ConfigError("artificial diffusion exponent must exceed -1");
}

inline double diffusive_flux(double r_in, double r_out, double u_sigma, double h, double eps) {
  check_epsilon(eps);
  if (!(h > 0.0)) throw ConfigError("mesh size must be positive");
  return upwind(r_in, r_out, u_sigma) - std::pow(h, eps) * (r_out - r_in);
}

/// Coefficients of F = alpha_in r_in + alpha_out r_out for a fixed u_sigma.
struct FluxCoefficients {
  double in;
  double out;
};

inline FluxCoefficients flux_coefficients(double u_sigma, double h_eps) {
  return {positive_part(u_sigma) + h_eps, negative_part(u_sigma) - h_eps};
}

/// Per-face flux record for a scalar density transported by u.
struct FaceFluxData {
  int face = -1;
  double u_sigma = 0.0;
  double u_plus = 0.0;
  double u_minus = 0.0;
  double r_up = 0.0;
  double flux = 0.0;
};

inline std::vector<FaceFluxData> face_fluxes(const DiscreteField& rho, const DiscreteField& u,
                                             double eps) {
  require_space(rho, Space::QhScalar, "face_fluxes");
  const Mesh& mesh = *rho.mesh;
  const double h = mesh.h();
  std::vector<FaceFluxData> out;
  out.reserve(mesh.interior_faces().size());
  for (int f : mesh.interior_faces()) {
    const Face& face = mesh.face(f);
    FaceFluxData d;
    d.face = f;
    d.u_sigma = face_velocity(u, f);
    d.u_plus = positive_part(d.u_sigma);
    d.u_minus = negative_part(d.u_sigma);
    const double r_in = rho.dofs[face.owner], r_out = rho.dofs[face.neighbor];
    d.r_up = upwind_value(r_in, r_out, d.u_sigma);
    d.flux = diffusive_flux(r_in, r_out, d.u_sigma, h, eps);
    out.push_back(d);
  }
  return out;
}

/// The two sides of the face-sum identity behind the kinetic energy balance:
///   sum |s| ( F(rho u_hat, u) . [[u_hat]] - F(rho, u) [[|u_hat|^2/2]] )
///     = - sum |s| ( rho^up |u_s| / 2 + h^eps <rho> ) |[[u_hat]]|^2.
struct FluxIdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double magnitude = 0.0;  // sum of absolute term sizes, for relative checks
};

inline FluxIdentitySides flux_identity(const DiscreteField& rho, const DiscreteField& u,
                                       double eps) {
  require_space(rho, Space::QhScalar, "flux_identity");
  require_space(u, Space::CR, "flux_identity");
  const Mesh& mesh = *rho.mesh;
  const DiscreteField uh = hat(u);
  const double h = mesh.h();
  const double he = std::pow(h, eps);
  FluxIdentitySides s;
  for (int f : mesh.interior_faces()) {
    const Face& face = mesh.face(f);
    const int K = face.owner, L = face.neighbor;
    const double us = face_velocity(u, f);
    const double rK = rho.dofs[K], rL = rho.dofs[L];
    const Vec2 uK = uh.cell_vector(K), uL = uh.cell_vector(L);
    const Vec2 jump = uL - uK;
    Vec2 fm;
    for (int c = 0; c < 2; ++c) fm[c] = diffusive_flux(rK * uK[c], rL * uL[c], us, h, eps);
    const double fr = diffusive_flux(rK, rL, us, h, eps);
    const double t1 = fm.dot(jump);
    const double t2 = fr * 0.5 * (uL.squaredNorm() - uK.squaredNorm());
    const double t3 = (0.5 * upwind_value(rK, rL, us) * std::abs(us) + he * 0.5 * (rK + rL)) *
                      jump.squaredNorm();
    s.lhs += face.measure * (t1 - t2);
    s.rhs -= face.measure * t3;
    s.magnitude += face.measure * (std::abs(t1) + std::abs(t2) + std::abs(t3));
  }
  return s;
}

}  // namespace mhdfvfe
