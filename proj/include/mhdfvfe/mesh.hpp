#pragma once

// Structured meshes of the unit square: right triangles (every square split
// along its lower-left to upper-right diagonal) or axis-aligned squares,
// optionally periodic in both directions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mhdfvfe/errors.hpp"

namespace mhdfvfe {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class CellShape { Triangle, Rectangle };

/// Rotates a vector by -90 degrees: (t1, t2) -> (t2, -t1). For an edge a->b
/// traversed counter-clockwise this gives the outward normal direction.
inline Vec2 rotate_cw(const Vec2& t) { return {t.y(), -t.x()}; }

struct Cell {
  int num_vertices = 0;
  std::array<int, 4> vertices{};  // identified (wrapped) vertex ids, CCW
  std::array<Vec2, 4> points{};   // unwrapped coordinates, CCW
  std::array<int, 4> faces{};     // triangle: face i is opposite vertex i
  std::array<int, 4> orientation{};  // +1 if n_{sigma,K} = n_sigma, else -1
  double measure = 0.0;
  double diameter = 0.0;
  Vec2 centroid = Vec2::Zero();
};

struct Face {
  /// Endpoints a -> b in the owner's counter-clockwise order, so that
  /// normal = rotate_cw(b - a) / |b - a| points out of the owner.
  std::array<int, 2> vertices{};
  std::array<Vec2, 2> points{};  // owner-side coordinates
  Vec2 center = Vec2::Zero();    // owner-side coordinates
  Vec2 normal = Vec2::Zero();
  double measure = 0.0;
  int owner = -1;
  int neighbor = -1;  // -1 on exterior faces
  /// Neighbor-side coordinates minus owner-side coordinates (non-zero only
  /// across the periodic seam).
  Vec2 neighbor_shift = Vec2::Zero();
  /// Distance between the adjacent cell centers; half a cell on walls.
  double cell_distance = 0.0;

  bool interior() const { return neighbor >= 0; }
};

class Mesh {
 public:
  CellShape shape() const { return shape_; }
  int cells_per_side() const { return n_; }
  bool periodic() const { return periodic_; }
  static constexpr int dimension() { return 2; }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Cell& cell(int k) const { return cells_[static_cast<std::size_t>(k)]; }
  const Face& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }

  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int faces_per_cell() const { return shape_ == CellShape::Triangle ? 3 : 4; }

  /// Maximal cell diameter.
  double h() const { return h_; }

  const std::vector<int>& interior_faces() const { return interior_faces_; }
  const std::vector<int>& exterior_faces() const { return exterior_faces_; }

  /// True for vertices on the boundary of a wall-bounded mesh.
  bool boundary_vertex(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }

  /// Cell containing x (x is wrapped into the unit square when periodic).
  /// Points on shared edges resolve to one of the adjacent cells.
  int locate(Vec2 x) const {
    if (periodic_) x = wrap(x);
    const int i = std::clamp(static_cast<int>(std::floor(x.x() * n_)), 0, n_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor(x.y() * n_)), 0, n_ - 1);
    const int square = i + n_ * j;
    if (shape_ == CellShape::Rectangle) return square;
    const double lx = x.x() * n_ - i;
    const double ly = x.y() * n_ - j;
    return 2 * square + (ly > lx ? 1 : 0);
  }

  /// Coordinates of x expressed in the unwrapped frame of cell k.
  Vec2 to_cell_frame(int k, Vec2 x) const {
    if (!periodic_) return x;
    const Vec2& c = cell(k).centroid;
    x.x() -= std::round(x.x() - c.x());
    x.y() -= std::round(x.y() - c.y());
    return x;
  }

  /// Periodic identification of boundary points: x1 = 0 <-> x1 = 1 and
  /// x2 = 0 <-> x2 = 1. Interior points are fixed.
  static Vec2 identify_boundary_point(Vec2 x) {
    for (int c = 0; c < 2; ++c) {
      if (x[c] == 0.0)
        x[c] = 1.0;
      else if (x[c] == 1.0)
        x[c] = 0.0;
    }
    return x;
  }

  static Vec2 wrap(Vec2 x) {
    x.x() -= std::floor(x.x());
    x.y() -= std::floor(x.y());
    return x;
  }

  friend Mesh build_tri_mesh(int n, bool periodic);
  friend Mesh build_rect_mesh(int n, bool periodic);

 private:
  static Mesh build(int n, bool periodic, CellShape shape);

  CellShape shape_ = CellShape::Triangle;
  int n_ = 0;
  bool periodic_ = true;
  double h_ = 0.0;
  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
  std::vector<int> interior_faces_;
  std::vector<int> exterior_faces_;
  std::vector<bool> boundary_vertex_;
};

inline Mesh Mesh::build(int n, bool periodic, CellShape shape) {
  if (n < 2) throw ConfigError("mesh needs at least 2 cells per side, got " + std::to_string(n));

  Mesh m;
  m.shape_ = shape;
  m.n_ = n;
  m.periodic_ = periodic;
  const double dx = 1.0 / n;
  const int nv_side = periodic ? n : n + 1;

  auto vertex_id = [&](int i, int j) {
    if (periodic) return (i % n) + n * (j % n);
    return i + nv_side * j;
  };
  m.vertices_.resize(static_cast<std::size_t>(nv_side * nv_side));
  m.boundary_vertex_.assign(m.vertices_.size(), false);
  for (int j = 0; j < nv_side; ++j)
    for (int i = 0; i < nv_side; ++i) {
      const auto v = static_cast<std::size_t>(vertex_id(i, j));
      m.vertices_[v] = Vec2(i * dx, j * dx);
      if (!periodic) m.boundary_vertex_[v] = (i == 0 || j == 0 || i == n || j == n);
    }

  auto add_cell = [&](std::initializer_list<std::pair<int, int>> corners) {
    Cell c;
    c.num_vertices = static_cast<int>(corners.size());
    int a = 0;
    for (auto [i, j] : corners) {
      c.vertices[static_cast<std::size_t>(a)] = vertex_id(i, j);
      c.points[static_cast<std::size_t>(a)] = Vec2(i * dx, j * dx);
      ++a;
    }
    Vec2 sum = Vec2::Zero();
    for (int q = 0; q < c.num_vertices; ++q) sum += c.points[static_cast<std::size_t>(q)];
    c.centroid = sum / c.num_vertices;
    c.measure = shape == CellShape::Triangle ? 0.5 * dx * dx : dx * dx;
    c.diameter = std::sqrt(2.0) * dx;
    m.cells_.push_back(c);
  };

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (shape == CellShape::Triangle) {
        add_cell({{i, j}, {i + 1, j}, {i + 1, j + 1}});  // below the diagonal
        add_cell({{i, j}, {i + 1, j + 1}, {i, j + 1}});  // above the diagonal
      } else {
        add_cell({{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}});
      }
    }

  // Faces are keyed by their midpoint on the half-step lattice, which is unique
  // even on the coarsest periodic mesh where distinct edges share vertex pairs.
  std::map<std::pair<int, int>, int> by_midpoint;
  const int lattice = 2 * n;
  for (int k = 0; k < m.num_cells(); ++k) {
    Cell& c = m.cells_[static_cast<std::size_t>(k)];
    const int nf = c.num_vertices;
    for (int lf = 0; lf < nf; ++lf) {
      // triangle: local face lf joins the two vertices other than lf;
      // rectangle: local face lf joins vertex lf and lf+1
      int la, lb;
      if (shape == CellShape::Triangle) {
        la = (lf + 1) % 3;
        lb = (lf + 2) % 3;
      } else {
        la = lf;
        lb = (lf + 1) % 4;
      }
      const Vec2 pa = c.points[static_cast<std::size_t>(la)];
      const Vec2 pb = c.points[static_cast<std::size_t>(lb)];
      const Vec2 mid = 0.5 * (pa + pb);
      int kx = static_cast<int>(std::lround(mid.x() * lattice));
      int ky = static_cast<int>(std::lround(mid.y() * lattice));
      if (periodic) {
        kx %= lattice;
        ky %= lattice;
      }
      auto it = by_midpoint.find({kx, ky});
      if (it == by_midpoint.end()) {
        Face f;
        f.vertices = {c.vertices[static_cast<std::size_t>(la)], c.vertices[static_cast<std::size_t>(lb)]};
        f.points = {pa, pb};
        f.center = mid;
        f.measure = (pb - pa).norm();
        f.normal = rotate_cw(pb - pa) / f.measure;
        f.owner = k;
        const int id = m.num_faces();
        m.faces_.push_back(f);
        by_midpoint.emplace(std::make_pair(kx, ky), id);
        c.faces[static_cast<std::size_t>(lf)] = id;
        c.orientation[static_cast<std::size_t>(lf)] = +1;
      } else {
        Face& f = m.faces_[static_cast<std::size_t>(it->second)];
        if (f.neighbor >= 0) throw std::logic_error("face shared by more than two cells");
        f.neighbor = k;
        // the neighbor traverses the edge as b -> a
        f.neighbor_shift = pb - f.points[0];
        c.faces[static_cast<std::size_t>(lf)] = it->second;
        c.orientation[static_cast<std::size_t>(lf)] = -1;
      }
    }
  }

  for (int f = 0; f < m.num_faces(); ++f) {
    Face& face = m.faces_[static_cast<std::size_t>(f)];
    if (face.interior()) {
      m.interior_faces_.push_back(f);
      const Vec2 cn = m.cell(face.neighbor).centroid - face.neighbor_shift;
      face.cell_distance = (cn - m.cell(face.owner).centroid).norm();
    } else {
      m.exterior_faces_.push_back(f);
      face.cell_distance = std::abs((face.center - m.cell(face.owner).centroid).dot(face.normal));
    }
  }
  if (shape == CellShape::Rectangle)
    for (auto& face : m.faces_)
      if (face.interior()) face.cell_distance = dx;  // exact value, not a rounded difference

  m.h_ = 0.0;
  for (const auto& c : m.cells_) m.h_ = std::max(m.h_, c.diameter);
  return m;
}

/// n x n squares, each split into two triangles along the same diagonal.
inline Mesh build_tri_mesh(int n, bool periodic = true) {
  return Mesh::build(n, periodic, CellShape::Triangle);
}

/// n x n axis-aligned squares.
inline Mesh build_rect_mesh(int n, bool periodic = true) {
  return Mesh::build(n, periodic, CellShape::Rectangle);
}

}  // namespace mhdfvfe
