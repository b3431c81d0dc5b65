#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mhdfvfe/fe_spaces.hpp"

using namespace mhdfvfe;

namespace {

constexpr double tau = 2.0 * std::numbers::pi;

std::shared_ptr<const Mesh> tri(int n, bool periodic = true) {
  return std::make_shared<const Mesh>(build_tri_mesh(n, periodic));
}
std::shared_ptr<const Mesh> rect(int n, bool periodic = true) {
  return std::make_shared<const Mesh>(build_rect_mesh(n, periodic));
}

DiscreteField random_field(Space s, std::shared_ptr<const Mesh> m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DiscreteField f(s, m);
  for (auto& v : f.dofs) v = U(rng);
  return f;
}

double potential(const Vec2& x) { return std::sin(tau * x.x()) * std::cos(tau * x.y()) + 0.3 * std::cos(tau * x.y()); }

}  // namespace

TEST(FeSpaces, DofCounts) {
  const auto m = tri(3);
  EXPECT_EQ(dof_count(*m, Space::QhScalar), 18);
  EXPECT_EQ(dof_count(*m, Space::QhVector), 36);
  EXPECT_EQ(dof_count(*m, Space::CR), 2 * 27);
  EXPECT_EQ(dof_count(*m, Space::RT0), 27);
  EXPECT_EQ(dof_count(*m, Space::Nodal), 9);
  EXPECT_THROW(DiscreteField(Space::RT0, m, Eigen::VectorXd::Zero(5)), SpaceMismatch);
}

TEST(FeSpaces, PlanarCrossProducts) {
  const Vec2 u(0.3, -1.2), B(2.0, 0.7), v(-0.4, 0.9);
  const double j = 1.7;
  EXPECT_DOUBLE_EQ(planar::cross(u, B), 0.3 * 0.7 + 1.2 * 2.0);
  EXPECT_NEAR(planar::cross(j, B).dot(B), 0.0, 1e-15);
  EXPECT_NEAR(planar::cross(j, B).dot(v), -j * planar::cross(v, B), 1e-14);
}

TEST(FeSpaces, ExactSequenceCurlThenDivIsZero) {
  for (const auto& m : {tri(6), rect(6), tri(5, false), rect(5, false)}) {
    const auto E = random_field(Space::Nodal, m, 3);
    EXPECT_LT(div_h(curl_vector(E)).dofs.cwiseAbs().maxCoeff(), 1e-12);
    const auto B = interp_RT_potential(m, m->periodic() ? Vec2(0.4, -1.1) : Vec2::Zero(), potential);
    EXPECT_LT(div_h(B).dofs.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FeSpaces, CurlCommutesWithInterpolation) {
  // flux of curl(phi) through a -> b is phi(b) - phi(a)
  for (const auto& m : {tri(4), rect(4)}) {
    const auto E = interp_E(m, potential);
    const auto C = curl_vector(E);
    const auto P = interp_RT_potential(m, Vec2::Zero(), potential);
    EXPECT_LT((C.dofs - P.dofs).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(FeSpaces, DivergenceIsCellAverage) {
  auto b = [](const Vec2& x) { return Vec2(std::sin(tau * x.x()) * x.y(), std::cos(tau * x.y()) + x.x() * x.x()); };
  auto divb = [](const Vec2& x) { return tau * std::cos(tau * x.x()) * x.y() - tau * std::sin(tau * x.y()); };
  for (const auto& m : {tri(5, false), rect(5, false)}) {
    const auto d = div_h(interp_RT(m, b, 8));
    const auto ref = project_Q(m, ScalarFunction(divb), 8);
    EXPECT_LT((d.dofs - ref.dofs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FeSpaces, InterpolantsReproduceLowestOrderFields) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Mat2 A = (Mat2() << 0.3, -1.0, 2.0, 0.5).finished();
  const Vec2 c(0.7, -0.2);
  auto lin = [&](const Vec2& x) -> Vec2 { return c + A * x; };
  auto rtfield = [&](const Vec2& x) -> Vec2 { return c + 0.8 * x; };
  auto scal = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - 0.5 * x.y(); };
  auto bilin = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - 0.5 * x.y() + 3.0 * x.x() * x.y(); };

  const auto mt = tri(4, false);
  const auto mr = rect(4, false);
  const auto ucr = interp_CR(mt, lin);
  const auto brt_t = interp_RT(mt, rtfield);
  const auto brt_r = interp_RT(mr, [](const Vec2& x) -> Vec2 { return Vec2(1.0 + 2.0 * x.x(), -0.5 + 0.3 * x.y()); });
  const auto et = interp_E(mt, scal);
  const auto er = interp_E(mr, bilin);
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(U(rng), U(rng));
    const int kt = mt->locate(x), kr = mr->locate(x);
    const auto qt = basis::reference_point(mt->cell(kt), mt->shape(), x);
    const auto qr = basis::reference_point(mr->cell(kr), mr->shape(), x);
    EXPECT_LT((eval_vector(ucr, kt, qt) - lin(x)).norm(), 1e-13);
    EXPECT_LT((eval_vector(brt_t, kt, qt) - rtfield(x)).norm(), 1e-13);
    EXPECT_LT((eval_vector(brt_r, kr, qr) - Vec2(1.0 + 2.0 * x.x(), -0.5 + 0.3 * x.y())).norm(), 1e-13);
    EXPECT_NEAR(eval_scalar(et, kt, qt), scal(x), 1e-13);
    EXPECT_NEAR(eval_scalar(er, kr, qr), bilin(x), 1e-13);
    EXPECT_LT((eval_gradient(et, kt, qt) - Vec2(2.0, -0.5)).norm(), 1e-12);
  }
  for (const auto& g : grad_h(ucr)) EXPECT_LT((g - A).norm(), 1e-12);
  const auto uh = hat(ucr);
  for (int k = 0; k < mt->num_cells(); ++k) EXPECT_LT((uh.cell_vector(k) - lin(mt->cell(k).centroid)).norm(), 1e-13);
}

TEST(FeSpaces, NormalContinuityOfRT0AndMeanContinuityOfCR) {
  for (const auto& m : {tri(4), rect(4)}) {
    const auto B = random_field(Space::RT0, m, 9);
    for (int f : m->interior_faces()) {
      const auto t = trace_jump_avg_vector(B, f);
      EXPECT_NEAR(t.jump.dot(m->face(f).normal), 0.0, 1e-12);
      EXPECT_NEAR(t.in.dot(m->face(f).normal) * m->face(f).measure, B.dofs[f], 1e-12);
    }
    const auto E = random_field(Space::Nodal, m, 10);
    for (int f : m->interior_faces()) EXPECT_NEAR(trace_jump_avg(E, f).jump, 0.0, 1e-13);
  }
  const auto m = tri(4);
  const auto u = random_field(Space::CR, m, 12);
  for (int f : m->interior_faces()) {
    const auto t = trace_jump_avg_vector(u, f);
    EXPECT_LT(t.jump.norm(), 1e-13);
    EXPECT_LT((t.avg - u.face_vector(f)).norm(), 1e-13);
  }
  const auto rho = random_field(Space::QhScalar, m, 13);
  const auto t = trace_jump_avg(rho, m->interior_faces().front());
  EXPECT_NEAR(t.jump, rho.dofs[m->face(m->interior_faces().front()).neighbor] -
                          rho.dofs[m->face(m->interior_faces().front()).owner], 1e-15);
  const auto w = tri(3, false);
  EXPECT_THROW(trace_jump_avg(DiscreteField(Space::QhScalar, w), w->exterior_faces().front()), std::invalid_argument);
  EXPECT_NO_THROW(trace_jump_avg(DiscreteField(Space::QhScalar, w), w->exterior_faces().front(), 0.0));
}

TEST(FeSpaces, DivergenceOfCRAndQhVector) {
  const auto m = tri(6);
  const auto u = interp_CR(m, [](const Vec2& x) -> Vec2 { return Vec2(std::sin(tau * x.y()), std::sin(tau * x.x())); });
  EXPECT_LT(div_h(u).dofs.cwiseAbs().maxCoeff(), 1e-13);
  const auto g = grad_h(u);
  const auto d = div_h(u);
  for (int k = 0; k < m->num_cells(); ++k) EXPECT_NEAR(g[k].trace(), d.dofs[k], 1e-12);

  const auto r = rect(4);
  DiscreteField q(Space::QhVector, r);
  for (int k = 0; k < r->num_cells(); ++k) q.dofs.segment<2>(2 * k) = Vec2(1.5, -0.5);
  EXPECT_LT(div_h(q).dofs.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(FeSpaces, NormsAndSpaceChecks) {
  const auto m = rect(3);
  DiscreteField q(Space::QhVector, m);
  for (int k = 0; k < m->num_cells(); ++k) q.dofs.segment<2>(2 * k) = Vec2(3.0, 4.0);
  EXPECT_NEAR(l2_norm(q), 5.0, 1e-13);
  const auto e = interp_E(m, [](const Vec2&) { return 2.0; });
  EXPECT_NEAR(l2_norm(e), 2.0, 1e-13);
  EXPECT_THROW(eval_scalar(q, 0, quadrature::RefPoint{}), SpaceMismatch);
  EXPECT_THROW(eval_vector(e, 0, quadrature::RefPoint{}), SpaceMismatch);
  EXPECT_THROW(interp_CR(m, [](const Vec2&) -> Vec2 { return Vec2::Zero(); }), SpaceMismatch);
  EXPECT_THROW(eval_gradient(q, 0, quadrature::RefPoint{}), SpaceMismatch);
  // project_Q of a smooth function converges to the L2 norm
  const auto p = project_Q(rect(32), ScalarFunction([](const Vec2& x) { return std::sin(tau * x.x()); }));
  EXPECT_NEAR(l2_norm(p), std::sqrt(0.5), 2e-3);
}

TEST(FeSpaces, ElementwiseCurlOfRT0Vanishes) {
  for (const auto& m : {tri(4), rect(4)}) {
    const auto B = random_field(Space::RT0, m, 21);
    const auto j = curl_scalar(B);
    EXPECT_TRUE(j.space == Space::QhScalar);
    EXPECT_EQ(j.dofs.cwiseAbs().maxCoeff(), 0.0);
    // oracle: circulation of the local field around the cell boundary
    for (int k = 0; k < m->num_cells(); k += 5) {
      const Cell& c = m->cell(k);
      double circ = 0.0;
      for (int a = 0; a < c.num_vertices; ++a) {
        const Vec2 p0 = c.points[a], p1 = c.points[(a + 1) % c.num_vertices];
        for (const auto& g : quadrature::gauss_legendre(3)) {
          const Vec2 x = (1 - g.s) * p0 + g.s * p1;
          circ += g.weight * eval_vector(B, k, basis::reference_point(c, m->shape(), x)).dot(p1 - p0);
        }
      }
      EXPECT_NEAR(circ, 0.0, 1e-12);
    }
  }
}
