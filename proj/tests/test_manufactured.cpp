#include <gtest/gtest.h>

#include "mhdfvfe/manufactured.hpp"

using namespace mhdfvfe;

namespace {

Vec2 fd_gradient(const std::function<double(const Vec2&)>& f, const Vec2& x, double d = 1e-6) {
  return Vec2((f(x + Vec2(d, 0)) - f(x - Vec2(d, 0))) / (2 * d), (f(x + Vec2(0, d)) - f(x - Vec2(0, d))) / (2 * d));
}

const Vec2 samples[] = {Vec2(0.1, 0.2), Vec2(0.37, 0.81), Vec2(0.9, 0.05), Vec2(0.5, 0.5)};

}  // namespace

TEST(Manufactured, Catalogue) {
  for (const auto& id : case_ids()) {
    const auto c = get_case(id);
    EXPECT_EQ(c.id, id);
    EXPECT_FALSE(c.doc.empty());
    EXPECT_TRUE(c.admits(BoundaryKind::Periodic));
    for (const auto& x : samples) {
      EXPECT_GT(c.rho0(x), 0.0);
      EXPECT_LT((c.potential_gradient(x) - fd_gradient(c.potential, x)).norm(), 1e-6);
      // periodic in both directions
      EXPECT_NEAR(c.rho0(x), c.rho0(x + Vec2(1, 0)), 1e-12);
      EXPECT_LT((c.B0(x) - c.B0(x + Vec2(0, 1))).norm(), 1e-12);
    }
  }
  EXPECT_THROW(get_case("orszag"), ConfigError);
  const auto c = get_case("constant");
  EXPECT_EQ(c.B0(Vec2(0.3, 0.4)), Vec2(1.0, 0.0));
}

TEST(Manufactured, MagneticFieldIsDivergenceFree) {
  for (const auto& id : case_ids()) {
    const auto c = get_case(id);
    const double d = 1e-5;
    for (const auto& x : samples) {
      const double div = (c.B0(x + Vec2(d, 0)).x() - c.B0(x - Vec2(d, 0)).x() + c.B0(x + Vec2(0, d)).y() -
                          c.B0(x - Vec2(0, d)).y()) / (2 * d);
      EXPECT_NEAR(div, 0.0, 1e-5);
    }
  }
}

TEST(Manufactured, TimeFactor) {
  TimeFactor eta{0.5};
  EXPECT_DOUBLE_EQ(eta.value(0.0), 1.0);
  EXPECT_NEAR(eta.value(0.5), 0.0, 1e-16);
  EXPECT_NEAR(eta.derivative(0.5), 0.0, 1e-15);
  for (double t : {0.05, 0.2, 0.41})
    EXPECT_NEAR(eta.derivative(t), (eta.value(t + 1e-6) - eta.value(t - 1e-6)) / 2e-6, 1e-7);
}

TEST(Manufactured, TestFunctionDerivatives) {
  const double T = 0.3;
  for (auto kind : {TestKind::Momentum, TestKind::Maxwell})
    for (int i = 0; i < catalogue_size(kind); ++i) {
      const auto v = vector_test_function(kind, i, T);
      for (const auto& x : samples) {
        for (int a = 0; a < 2; ++a) {
          const auto comp = [&](const Vec2& y) { return v.w(y)[a]; };
          const Vec2 g = fd_gradient(comp, x);
          EXPECT_NEAR(v.jac_w(x)(a, 0), g.x(), 1e-5) << v.name;
          EXPECT_NEAR(v.jac_w(x)(a, 1), g.y(), 1e-5) << v.name;
        }
      }
    }
  for (auto kind : {TestKind::Continuity, TestKind::Ampere})
    for (int i = 0; i < catalogue_size(kind); ++i) {
      const auto s = scalar_test_function(kind, i, T);
      for (const auto& x : samples) EXPECT_LT((s.grad_s(x) - fd_gradient(s.s, x)).norm(), 1e-5) << s.name;
    }
  // Maxwell test function is a curl, hence solenoidal
  const auto C = vector_test_function(TestKind::Maxwell, 0, T);
  for (const auto& x : samples) EXPECT_NEAR(C.div(0.1, x), 0.0, 1e-10);
}

TEST(Manufactured, IndexAndKindErrors) {
  EXPECT_THROW(scalar_test_function(TestKind::Continuity, 1, 1.0), std::out_of_range);
  EXPECT_THROW(vector_test_function(TestKind::Momentum, -1, 1.0), std::out_of_range);
  EXPECT_THROW(vector_test_function(TestKind::Ampere, 0, 1.0), std::invalid_argument);
  EXPECT_THROW(scalar_test_function(TestKind::Maxwell, 0, 1.0), std::invalid_argument);
}

TEST(Manufactured, WallAdmissibility) {
  EXPECT_EQ(admissible_indices(TestKind::Momentum, BoundaryKind::Periodic).size(), 2u);
  EXPECT_EQ(admissible_indices(TestKind::Momentum, BoundaryKind::NoSlip), std::vector<int>{0});
  EXPECT_EQ(admissible_indices(TestKind::Ampere, BoundaryKind::NoSlip), std::vector<int>{1});
  const auto v = vector_test_function(TestKind::Momentum, 0, 1.0);
  const auto C = vector_test_function(TestKind::Maxwell, 0, 1.0);
  const auto psi = scalar_test_function(TestKind::Ampere, 1, 1.0);
  for (double s : {0.0, 0.3, 0.77, 1.0}) {
    for (const Vec2& x : {Vec2(0, s), Vec2(1, s), Vec2(s, 0), Vec2(s, 1)}) {
      EXPECT_LT(v.w(x).norm(), 1e-14);
      EXPECT_NEAR(psi.s(x), 0.0, 1e-14);
    }
    EXPECT_NEAR(C.w(Vec2(0, s)).x(), 0.0, 1e-13);
    EXPECT_NEAR(C.w(Vec2(s, 1)).y(), 0.0, 1e-13);
  }
}
