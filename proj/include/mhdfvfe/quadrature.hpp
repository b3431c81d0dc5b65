#pragma once

// Quadrature on the reference triangle, reference square and reference edge.
// Weights are normalized to sum to one; multiply by the cell/face measure.

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "mhdfvfe/mesh.hpp"

namespace mhdfvfe::quadrature {

/// Point on a reference cell. Triangle: barycentric weights of vertices 0,1,2.
/// Square: local coordinates (s, t) in [0,1]^2 stored in bary[0], bary[1].
struct RefPoint {
  std::array<double, 3> bary{};
  double weight = 0.0;
};

struct EdgePoint {
  double s = 0.0;  // position along the edge, 0 at a, 1 at b
  double weight = 0.0;
};

/// Gauss-Legendre on [0,1], exact for degree 2k-1.
inline std::vector<EdgePoint> gauss_legendre(int k) {
  static std::mutex lock;
  static std::map<int, std::vector<EdgePoint>> cache;
  std::lock_guard guard(lock);
  if (auto it = cache.find(k); it != cache.end()) return it->second;

  auto legendre = [k](double x) {
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= k; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, k * (x * p1 - p0) / (x * x - 1.0)};
  };
  std::vector<EdgePoint> rule;
  for (int i = 0; i < k; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    rule.push_back({0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)});
  }
  cache.emplace(k, rule);
  return rule;
}

/// Collapsed (Duffy) tensor Gauss rule on the triangle, exact for degree 2k-1.
inline std::vector<RefPoint> triangle_gauss(int k) {
  static std::mutex lock;
  static std::map<int, std::vector<RefPoint>> cache;
  {
    std::lock_guard guard(lock);
    if (auto it = cache.find(k); it != cache.end()) return it->second;
  }
  // The collapsed direction carries the Jacobian (1 - s), hence one extra node.
  const auto gs = gauss_legendre(k + 1);
  const auto gt = gauss_legendre(k);
  std::vector<RefPoint> rule;
  for (const auto& a : gs)
    for (const auto& b : gt) {
      const double l1 = a.s;
      const double l2 = (1.0 - a.s) * b.s;
      rule.push_back({{1.0 - l1 - l2, l1, l2}, 2.0 * a.weight * b.weight * (1.0 - a.s)});
    }
  std::lock_guard guard(lock);
  cache.emplace(k, rule);
  return rule;
}

inline const std::vector<RefPoint>& triangle_centroid() {
  static const std::vector<RefPoint> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0}};
  return rule;
}

/// Edge-midpoint rule, exact for quadratics.
inline const std::vector<RefPoint>& triangle_midpoints() {
  static const std::vector<RefPoint> rule{
      {{0.0, 0.5, 0.5}, 1.0 / 3}, {{0.5, 0.0, 0.5}, 1.0 / 3}, {{0.5, 0.5, 0.0}, 1.0 / 3}};
  return rule;
}

/// Seven-point rule exact for degree 5.
inline const std::vector<RefPoint>& triangle_degree5() {
  static const std::vector<RefPoint> rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, b1 = (9.0 + 2.0 * s15) / 21.0;
    const double a2 = (6.0 + s15) / 21.0, b2 = (9.0 - 2.0 * s15) / 21.0;
    const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
    return std::vector<RefPoint>{
        {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 9.0 / 40.0},
        {{b1, a1, a1}, w1}, {{a1, b1, a1}, w1}, {{a1, a1, b1}, w1},
        {{b2, a2, a2}, w2}, {{a2, b2, a2}, w2}, {{a2, a2, b2}, w2}};
  }();
  return rule;
}

/// Tensor Gauss rule on the unit square, exact for degree 2k-1 per direction.
inline std::vector<RefPoint> square_gauss(int k) {
  const auto g = gauss_legendre(k);
  std::vector<RefPoint> rule;
  for (const auto& b : g)
    for (const auto& a : g) rule.push_back({{a.s, b.s, 0.0}, a.weight * b.weight});
  return rule;
}

/// Rule exact for products of the lowest-order fields up to degree 5.
inline std::vector<RefPoint> exact_rule(CellShape shape) {
  return shape == CellShape::Triangle ? triangle_degree5() : square_gauss(3);
}

/// Rule for integrands containing smooth external functions.
inline std::vector<RefPoint> smooth_rule(CellShape shape, int k = 4) {
  return shape == CellShape::Triangle ? triangle_gauss(k) : square_gauss(k);
}

/// Physical location of a reference point in cell c.
inline Vec2 map_point(const Cell& c, CellShape shape, const RefPoint& q) {
  if (shape == CellShape::Triangle)
    return q.bary[0] * c.points[0] + q.bary[1] * c.points[1] + q.bary[2] * c.points[2];
  const Vec2 ext = c.points[2] - c.points[0];
  return c.points[0] + Vec2(q.bary[0] * ext.x(), q.bary[1] * ext.y());
}

}  // namespace mhdfvfe::quadrature
