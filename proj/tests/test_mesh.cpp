#include <random>

#include <gtest/gtest.h>

#include "mhdfvfe/mesh.hpp"

using namespace mhdfvfe;

namespace {

struct MeshCase {
  CellShape shape;
  bool periodic;
};

Mesh build(const MeshCase& c, int n) {
  return c.shape == CellShape::Triangle ? build_tri_mesh(n, c.periodic) : build_rect_mesh(n, c.periodic);
}

class MeshTopology : public ::testing::TestWithParam<MeshCase> {};

}  // namespace

TEST_P(MeshTopology, Counts) {
  const auto p = GetParam();
  for (int n : {2, 3, 8}) {
    const Mesh m = build(p, n);
    const int cells = p.shape == CellShape::Triangle ? 2 * n * n : n * n;
    EXPECT_EQ(m.num_cells(), cells);
    EXPECT_EQ(m.num_vertices(), p.periodic ? n * n : (n + 1) * (n + 1));
    EXPECT_EQ(static_cast<int>(m.exterior_faces().size()), p.periodic ? 0 : 4 * n);
    // Euler characteristic: torus 0, disc 1
    EXPECT_EQ(m.num_vertices() - m.num_faces() + m.num_cells(), p.periodic ? 0 : 1);
    EXPECT_DOUBLE_EQ(m.h(), std::sqrt(2.0) / n);
  }
}

TEST_P(MeshTopology, AreasNormalsOrientation) {
  const Mesh m = build(GetParam(), 5);
  double area = 0.0;
  for (const auto& c : m.cells()) area += c.measure;
  EXPECT_NEAR(area, 1.0, 1e-14);

  for (int f = 0; f < m.num_faces(); ++f) {
    const Face& face = m.face(f);
    EXPECT_NEAR(face.normal.norm(), 1.0, 1e-14);
    EXPECT_NEAR(face.measure, (face.points[1] - face.points[0]).norm(), 1e-14);
    EXPECT_NEAR(face.normal.dot(face.points[1] - face.points[0]), 0.0, 1e-14);
    EXPECT_GT((face.center - m.cell(face.owner).centroid).dot(face.normal), 0.0);
    if (face.interior()) {
      const Vec2 c = m.cell(face.neighbor).centroid;
      EXPECT_LT((face.center + face.neighbor_shift - c).dot(face.normal), 0.0);
    }
  }
  // each cell lists its faces with +1 exactly when it owns them; sum n|s| = 0
  for (int k = 0; k < m.num_cells(); ++k) {
    const Cell& c = m.cell(k);
    Vec2 closure = Vec2::Zero();
    for (int i = 0; i < m.faces_per_cell(); ++i) {
      const Face& face = m.face(c.faces[i]);
      EXPECT_EQ(c.orientation[i], face.owner == k ? 1 : -1);
      if (c.orientation[i] == -1) EXPECT_EQ(face.neighbor, k);
      closure += c.orientation[i] * face.measure * face.normal;
    }
    EXPECT_LT(closure.norm(), 1e-14);
  }
}

TEST_P(MeshTopology, LocateFindsContainingCell) {
  const Mesh m = build(GetParam(), 7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vec2 x(U(rng), U(rng));
    const int k = m.locate(x);
    const Cell& c = m.cell(k);
    const Vec2 y = m.to_cell_frame(k, x);
    // inside test with the CCW edges
    for (int a = 0; a < c.num_vertices; ++a) {
      const Vec2 e = c.points[(a + 1) % c.num_vertices] - c.points[a];
      const Vec2 d = y - c.points[a];
      EXPECT_GE(e.x() * d.y() - e.y() * d.x(), -1e-14);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(All, MeshTopology,
                         ::testing::Values(MeshCase{CellShape::Triangle, true}, MeshCase{CellShape::Triangle, false},
                                           MeshCase{CellShape::Rectangle, true},
                                           MeshCase{CellShape::Rectangle, false}),
                         [](const auto& info) {
                           return std::string(info.param.shape == CellShape::Triangle ? "Tri" : "Rect") +
                                  (info.param.periodic ? "Periodic" : "Walls");
                         });

TEST(Mesh, TriangleDiagonalSplit) {
  const Mesh m = build_tri_mesh(2, false);
  ASSERT_EQ(m.num_cells(), 8);
  // every square is cut along its lower-left to upper-right diagonal
  int diagonal = 0;
  for (const auto& f : m.faces()) {
    const Vec2 d = f.points[1] - f.points[0];
    if (std::abs(std::abs(d.x()) - 0.5) < 1e-15 && std::abs(std::abs(d.y()) - 0.5) < 1e-15) {
      EXPECT_GT(d.x() * d.y(), 0.0);
      ++diagonal;
    }
  }
  EXPECT_EQ(diagonal, 4);
  EXPECT_NEAR(m.cell(0).measure, 0.125, 1e-15);
  EXPECT_THROW(build_tri_mesh(1, false), ConfigError);
}

TEST(Mesh, PeriodicIdentification) {
  EXPECT_EQ(Mesh::identify_boundary_point(Vec2(0.0, 0.3)), Vec2(1.0, 0.3));
  EXPECT_EQ(Mesh::identify_boundary_point(Vec2(0.4, 1.0)), Vec2(0.4, 0.0));
  EXPECT_EQ(Mesh::identify_boundary_point(Vec2(0.4, 0.6)), Vec2(0.4, 0.6));
  const Vec2 w = Mesh::wrap(Vec2(1.25, -0.25));
  EXPECT_NEAR(w.x(), 0.25, 1e-15);
  EXPECT_NEAR(w.y(), 0.75, 1e-15);
}

TEST(Mesh, SeamFacesCarryShift) {
  const Mesh m = build_rect_mesh(4, true);
  int seam = 0;
  for (const auto& f : m.faces())
    if (f.neighbor_shift.norm() > 0.5) ++seam;
  EXPECT_EQ(seam, 8);
  for (const auto& f : m.faces()) EXPECT_NEAR(f.cell_distance, 0.25, 1e-14);
}

TEST(Mesh, WallVerticesAndHalfCellDistance) {
  const Mesh m = build_rect_mesh(4, false);
  int boundary = 0;
  for (int v = 0; v < m.num_vertices(); ++v) boundary += m.boundary_vertex(v);
  EXPECT_EQ(boundary, 16);
  for (int f : m.exterior_faces()) EXPECT_NEAR(m.face(f).cell_distance, 0.125, 1e-14);
}
