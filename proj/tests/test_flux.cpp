#include <random>

#include <gtest/gtest.h>

#include "mhdfvfe/flux.hpp"

using namespace mhdfvfe;

namespace {

std::shared_ptr<const Mesh> tri(int n) { return std::make_shared<const Mesh>(build_tri_mesh(n, true)); }

}  // namespace

TEST(Flux, PositiveNegativeParts) {
  EXPECT_EQ(positive_part(2.5), 2.5);
  EXPECT_EQ(positive_part(-2.5), 0.0);
  EXPECT_EQ(negative_part(-2.5), -2.5);
  EXPECT_EQ(negative_part(2.5), 0.0);
  EXPECT_EQ(positive_part(0.7) + negative_part(0.7), 0.7);
}

TEST(Flux, UpwindSelectsDonorCell) {
  EXPECT_DOUBLE_EQ(upwind(2.0, 3.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(upwind(2.0, 3.0, -1.0), -3.0);
  EXPECT_DOUBLE_EQ(upwind(2.0, 3.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(upwind_value(2.0, 3.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(upwind_value(2.0, 3.0, -1e-300), 3.0);
}

TEST(Flux, DiffusiveFlux) {
  // r_in = 1, r_out = 2, u = 0.5, h = 0.25, eps = 1: 0.5 - 0.25 = 0.25
  EXPECT_DOUBLE_EQ(diffusive_flux(1.0, 2.0, 0.5, 0.25, 1.0), 0.25);
  EXPECT_THROW(diffusive_flux(1.0, 2.0, 0.5, 0.25, -1.0), ConfigError);
  EXPECT_THROW(diffusive_flux(1.0, 2.0, 0.5, 0.0, 1.0), ConfigError);
  EXPECT_NO_THROW(diffusive_flux(1.0, 2.0, 0.5, 0.25, -0.5));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double a = U(rng) + 2, b = U(rng) + 2, u = U(rng), eps = U(rng) * 0.4 + 0.5;
    // conservative: the flux seen from the other side is the negative
    EXPECT_NEAR(diffusive_flux(a, b, u, 0.1, eps), -diffusive_flux(b, a, -u, 0.1, eps), 1e-14);
    const auto c = flux_coefficients(u, std::pow(0.1, eps));
    EXPECT_NEAR(c.in * a + c.out * b, diffusive_flux(a, b, u, 0.1, eps), 1e-14);
    EXPECT_GE(c.in, 0.0);
    EXPECT_LE(c.out, 0.0);
  }
}

TEST(Flux, FaceVelocityMatchesFaceQuadrature) {
  const auto m = tri(5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DiscreteField u(Space::CR, m);
  for (auto& v : u.dofs) v = U(rng);
  const auto g = quadrature::gauss_legendre(5);
  for (int f : m->interior_faces()) {
    const Face& face = m->face(f);
    double s = 0.0;
    for (const auto& e : g) {
      const Vec2 x = (1 - e.s) * face.points[0] + e.s * face.points[1];
      s += e.weight * eval_vector(u, face.owner, basis::reference_point(m->cell(face.owner), m->shape(), x)).dot(face.normal);
    }
    EXPECT_NEAR(face_velocity(u, f), s, 1e-13);
  }
  DiscreteField q(Space::QhVector, m);
  for (auto& v : q.dofs) v = U(rng);
  for (int f : m->interior_faces()) {
    const Face& face = m->face(f);
    EXPECT_NEAR(face_velocity(q, f), 0.5 * (q.cell_vector(face.owner) + q.cell_vector(face.neighbor)).dot(face.normal),
                1e-14);
  }
  EXPECT_THROW(face_velocity(DiscreteField(Space::RT0, m), 0), SpaceMismatch);
}

TEST(Flux, FaceFluxesAreConservative) {
  const auto m = tri(4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DiscreteField rho(Space::QhScalar, m), u(Space::CR, m);
  for (auto& v : rho.dofs) v = 1.5 + U(rng);
  for (auto& v : u.dofs) v = U(rng);
  const auto data = face_fluxes(rho, u, 1.0);
  ASSERT_EQ(data.size(), m->interior_faces().size());
  Eigen::VectorXd net = Eigen::VectorXd::Zero(m->num_cells());
  for (const auto& d : data) {
    const Face& face = m->face(d.face);
    net[face.owner] += face.measure * d.flux;
    net[face.neighbor] -= face.measure * d.flux;
    EXPECT_DOUBLE_EQ(d.u_plus + d.u_minus, d.u_sigma);
  }
  EXPECT_NEAR(net.sum(), 0.0, 1e-13);
}

TEST(Flux, KineticFluxIdentityOnRandomPairs) {
  const auto m = tri(4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> R(0.0, 3.0), U(-2.0, 2.0), E(-0.5, 2.0);
  DiscreteField rho(Space::QhScalar, m), u(Space::CR, m);
  for (int trial = 0; trial < 1000; ++trial) {
    for (auto& v : rho.dofs) v = R(rng);
    for (auto& v : u.dofs) v = U(rng);
    const auto s = flux_identity(rho, u, E(rng));
    EXPECT_LE(std::abs(s.lhs - s.rhs), 1e-12 * std::max(1.0, s.magnitude));
    EXPECT_LE(s.rhs, 0.0);
  }
}
