#pragma once

// Lowest-order discrete spaces on the structured meshes:
//   QhScalar / QhVector  piecewise constants
//   CR                   Crouzeix-Raviart vectors, one face-mean DOF pair per face
//   RT0                  Raviart-Thomas, one normal flux per face
//   Nodal                continuous P1 (triangles) or Q1 (squares) scalars
// In two dimensions the electric field and the current are out-of-plane
// scalars; Nodal --curl--> RT0 --div--> QhScalar is exact.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "mhdfvfe/errors.hpp"
#include "mhdfvfe/mesh.hpp"
#include "mhdfvfe/quadrature.hpp"

namespace mhdfvfe {

enum class Space { QhScalar, QhVector, CR, RT0, Nodal };

inline const char* to_string(Space s) {
  switch (s) {
    case Space::QhScalar: return "QhScalar";
    case Space::QhVector: return "QhVector";
    case Space::CR: return "CR";
    case Space::RT0: return "RT0";
    case Space::Nodal: return "Nodal";
  }
  return "?";
}

inline int dof_count(const Mesh& mesh, Space s) {
  switch (s) {
    case Space::QhScalar: return mesh.num_cells();
    case Space::QhVector: return 2 * mesh.num_cells();
    case Space::CR: return 2 * mesh.num_faces();
    case Space::RT0: return mesh.num_faces();
    case Space::Nodal: return mesh.num_vertices();
  }
  return 0;
}

/// DOF vector tagged with its space. Layouts: QhVector [2k + c], CR [2f + c],
/// RT0 flux through face f along n_f, Nodal by identified vertex.
struct DiscreteField {
  Space space = Space::QhScalar;
  Eigen::VectorXd dofs;
  std::shared_ptr<const Mesh> mesh;

  DiscreteField() = default;
  DiscreteField(Space s, std::shared_ptr<const Mesh> m) : space(s), mesh(std::move(m)) {
    dofs = Eigen::VectorXd::Zero(dof_count(*mesh, space));
  }
  DiscreteField(Space s, std::shared_ptr<const Mesh> m, Eigen::VectorXd values)
      : space(s), dofs(std::move(values)), mesh(std::move(m)) {
    if (dofs.size() != dof_count(*mesh, space))
      throw SpaceMismatch(std::string("DOF count does not match space ") + to_string(space));
  }

  Vec2 cell_vector(int k) const { return {dofs[2 * k], dofs[2 * k + 1]}; }
  Vec2 face_vector(int f) const { return {dofs[2 * f], dofs[2 * f + 1]}; }
};

inline void require_space(const DiscreteField& f, Space s, const char* op) {
  if (f.space != s)
    throw SpaceMismatch(std::string(op) + ": expected " + to_string(s) + " field, got " +
                        to_string(f.space));
}

using ScalarFunction = std::function<double(const Vec2&)>;
using VectorFunction = std::function<Vec2(const Vec2&)>;

/// Two-dimensional conventions for the electromagnetic quantities.
namespace planar {
/// u x B for in-plane u, B: the out-of-plane scalar u1 B2 - u2 B1.
inline double cross(const Vec2& u, const Vec2& b) { return u.x() * b.y() - u.y() * b.x(); }
/// j x B for out-of-plane j: j (-B2, B1).
inline Vec2 cross(double j, const Vec2& b) { return {-j * b.y(), j * b.x()}; }
/// curl of a scalar from its gradient: (d2 psi, -d1 psi).
inline Vec2 curl_of_gradient(const Vec2& grad) { return rotate_cw(grad); }
/// curl of an in-plane vector from its Jacobian J(a,b) = d_b v_a: d1 v2 - d2 v1.
inline double curl_of_jacobian(const Mat2& jac) { return jac(1, 0) - jac(0, 1); }
}  // namespace planar

// ---------------------------------------------------------------------------
// Local bases
// ---------------------------------------------------------------------------

namespace basis {

/// Gradients of the barycentric coordinates of a counter-clockwise triangle.
inline std::array<Vec2, 3> barycentric_gradients(const Cell& c) {
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = c.points[(i + 2) % 3] - c.points[(i + 1) % 3];
    g[i] = -rotate_cw(e) / (2.0 * c.measure);
  }
  return g;
}

/// Reference coordinates of a physical point x (cell frame) in cell c.
inline quadrature::RefPoint reference_point(const Cell& c, CellShape shape, const Vec2& x) {
  quadrature::RefPoint q;
  if (shape == CellShape::Triangle) {
    const auto g = barycentric_gradients(c);
    for (int i = 0; i < 3; ++i) q.bary[i] = g[i].dot(x - c.points[(i + 1) % 3]);
  } else {
    const Vec2 ext = c.points[2] - c.points[0];
    q.bary[0] = (x.x() - c.points[0].x()) / ext.x();
    q.bary[1] = (x.y() - c.points[0].y()) / ext.y();
  }
  return q;
}

/// Nodal shape functions at a reference point, vertex order of the cell.
inline std::array<double, 4> nodal(CellShape shape, const quadrature::RefPoint& q) {
  if (shape == CellShape::Triangle) return {q.bary[0], q.bary[1], q.bary[2], 0.0};
  const double s = q.bary[0], t = q.bary[1];
  return {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}

inline std::array<Vec2, 4> nodal_gradients(const Cell& c, CellShape shape,
                                           const quadrature::RefPoint& q) {
  if (shape == CellShape::Triangle) {
    const auto g = barycentric_gradients(c);
    return {g[0], g[1], g[2], Vec2::Zero()};
  }
  const Vec2 ext = c.points[2] - c.points[0];
  const double s = q.bary[0], t = q.bary[1];
  const double hx = ext.x(), hy = ext.y();
  return {Vec2(-(1 - t) / hx, -(1 - s) / hy), Vec2((1 - t) / hx, -s / hy),
          Vec2(t / hx, s / hy), Vec2(-t / hx, (1 - s) / hy)};
}

/// Crouzeix-Raviart scalar shape functions 1 - 2 lambda_i (face i opposite vertex i).
inline std::array<double, 3> cr(const quadrature::RefPoint& q) {
  return {1 - 2 * q.bary[0], 1 - 2 * q.bary[1], 1 - 2 * q.bary[2]};
}

inline std::array<Vec2, 3> cr_gradients(const Cell& c) {
  auto g = barycentric_gradients(c);
  for (auto& v : g) v *= -2.0;
  return g;
}

/// RT0 local shape functions with unit outward flux through local face i.
inline std::array<Vec2, 4> rt(const Cell& c, CellShape shape, const quadrature::RefPoint& q) {
  if (shape == CellShape::Triangle) {
    const Vec2 x = quadrature::map_point(c, shape, q);
    std::array<Vec2, 4> b;
    for (int i = 0; i < 3; ++i) b[i] = (x - c.points[i]) / (2.0 * c.measure);
    b[3] = Vec2::Zero();
    return b;
  }
  // faces: bottom, right, top, left
  const Vec2 ext = c.points[2] - c.points[0];
  const double s = q.bary[0], t = q.bary[1];
  const double hx = ext.x(), hy = ext.y();
  return {Vec2(0.0, -(1 - t) / hx), Vec2(s / hy, 0.0), Vec2(0.0, t / hx),
          Vec2(-(1 - s) / hy, 0.0)};
}

}  // namespace basis

// ---------------------------------------------------------------------------
// Pointwise evaluation
// ---------------------------------------------------------------------------

inline double eval_scalar(const DiscreteField& f, int k, const quadrature::RefPoint& q) {
  const Mesh& mesh = *f.mesh;
  const Cell& c = mesh.cell(k);
  switch (f.space) {
    case Space::QhScalar: return f.dofs[k];
    case Space::Nodal: {
      const auto N = basis::nodal(mesh.shape(), q);
      double v = 0.0;
      for (int a = 0; a < c.num_vertices; ++a) v += N[a] * f.dofs[c.vertices[a]];
      return v;
    }
    default: throw SpaceMismatch(std::string("eval_scalar: vector space ") + to_string(f.space));
  }
}

inline Vec2 eval_vector(const DiscreteField& f, int k, const quadrature::RefPoint& q) {
  const Mesh& mesh = *f.mesh;
  const Cell& c = mesh.cell(k);
  switch (f.space) {
    case Space::QhVector: return f.cell_vector(k);
    case Space::CR: {
      if (mesh.shape() != CellShape::Triangle) throw SpaceMismatch("CR lives on triangles only");
      const auto phi = basis::cr(q);
      Vec2 v = Vec2::Zero();
      for (int i = 0; i < 3; ++i) v += phi[i] * f.face_vector(c.faces[i]);
      return v;
    }
    case Space::RT0: {
      const auto psi = basis::rt(c, mesh.shape(), q);
      Vec2 v = Vec2::Zero();
      for (int i = 0; i < mesh.faces_per_cell(); ++i)
        v += c.orientation[i] * f.dofs[c.faces[i]] * psi[i];
      return v;
    }
    default: throw SpaceMismatch(std::string("eval_vector: scalar space ") + to_string(f.space));
  }
}

/// Gradient of a Nodal field.
inline Vec2 eval_gradient(const DiscreteField& f, int k, const quadrature::RefPoint& q) {
  require_space(f, Space::Nodal, "eval_gradient");
  const Mesh& mesh = *f.mesh;
  const Cell& c = mesh.cell(k);
  const auto g = basis::nodal_gradients(c, mesh.shape(), q);
  Vec2 v = Vec2::Zero();
  for (int a = 0; a < c.num_vertices; ++a) v += f.dofs[c.vertices[a]] * g[a];
  return v;
}

// ---------------------------------------------------------------------------
// Projection and interpolation
// ---------------------------------------------------------------------------

/// Element averages of a scalar function. k selects the collapsed Gauss rule
/// (exact for degree 2k-1).
inline DiscreteField project_Q(std::shared_ptr<const Mesh> mesh, const ScalarFunction& f,
                               int k = 8) {
  DiscreteField out(Space::QhScalar, mesh);
  const auto rule = quadrature::smooth_rule(mesh->shape(), k);
  for (int K = 0; K < mesh->num_cells(); ++K) {
    const Cell& c = mesh->cell(K);
    double s = 0.0;
    for (const auto& q : rule) s += q.weight * f(quadrature::map_point(c, mesh->shape(), q));
    out.dofs[K] = s;
  }
  return out;
}

inline DiscreteField project_Q(std::shared_ptr<const Mesh> mesh, const VectorFunction& f,
                               int k = 8) {
  DiscreteField out(Space::QhVector, mesh);
  const auto rule = quadrature::smooth_rule(mesh->shape(), k);
  for (int K = 0; K < mesh->num_cells(); ++K) {
    const Cell& c = mesh->cell(K);
    Vec2 s = Vec2::Zero();
    for (const auto& q : rule) s += q.weight * f(quadrature::map_point(c, mesh->shape(), q));
    out.dofs.segment<2>(2 * K) = s;
  }
  return out;
}

/// Face-mean interpolation into CR.
inline DiscreteField interp_CR(std::shared_ptr<const Mesh> mesh, const VectorFunction& v,
                               int points = 6) {
  if (mesh->shape() != CellShape::Triangle) throw SpaceMismatch("CR lives on triangles only");
  DiscreteField out(Space::CR, mesh);
  const auto rule = quadrature::gauss_legendre(points);
  for (int f = 0; f < mesh->num_faces(); ++f) {
    const Face& face = mesh->face(f);
    Vec2 s = Vec2::Zero();
    for (const auto& q : rule) s += q.weight * v((1 - q.s) * face.points[0] + q.s * face.points[1]);
    out.dofs.segment<2>(2 * f) = s;
  }
  return out;
}

/// Normal-flux interpolation into RT0: DOF = integral of B . n_sigma over sigma.
inline DiscreteField interp_RT(std::shared_ptr<const Mesh> mesh, const VectorFunction& b,
                               int points = 6) {
  DiscreteField out(Space::RT0, mesh);
  const auto rule = quadrature::gauss_legendre(points);
  for (int f = 0; f < mesh->num_faces(); ++f) {
    const Face& face = mesh->face(f);
    double s = 0.0;
    for (const auto& q : rule)
      s += q.weight * b((1 - q.s) * face.points[0] + q.s * face.points[1]).dot(face.normal);
    out.dofs[f] = s * face.measure;
  }
  return out;
}

/// RT0 interpolation of B = constant + curl(potential). The flux of curl(phi)
/// through a -> b is phi(b) - phi(a), so the result is exactly divergence free.
inline DiscreteField interp_RT_potential(std::shared_ptr<const Mesh> mesh, const Vec2& constant,
                                         const ScalarFunction& potential) {
  DiscreteField out(Space::RT0, mesh);
  for (int f = 0; f < mesh->num_faces(); ++f) {
    const Face& face = mesh->face(f);
    out.dofs[f] = constant.dot(face.normal) * face.measure +
                  (potential(face.points[1]) - potential(face.points[0]));
  }
  return out;
}

/// Vertex interpolation of the out-of-plane electric field.
inline DiscreteField interp_E(std::shared_ptr<const Mesh> mesh, const ScalarFunction& e) {
  DiscreteField out(Space::Nodal, mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) out.dofs[v] = e(mesh->vertices()[v]);
  return out;
}

// ---------------------------------------------------------------------------
// Discrete differential operators
// ---------------------------------------------------------------------------

/// Element-wise gradient of a CR field; entry (a, b) = d_b u_a.
inline std::vector<Mat2> grad_h(const DiscreteField& u) {
  require_space(u, Space::CR, "grad_h");
  const Mesh& mesh = *u.mesh;
  std::vector<Mat2> out(mesh.num_cells());
  for (int k = 0; k < mesh.num_cells(); ++k) {
    const Cell& c = mesh.cell(k);
    const auto g = basis::cr_gradients(c);
    Mat2 m = Mat2::Zero();
    for (int i = 0; i < 3; ++i) m += u.face_vector(c.faces[i]) * g[i].transpose();
    out[k] = m;
  }
  return out;
}

/// Face normal velocity of a QhVector field: <u> . n_sigma, zero on walls.
inline double average_normal_velocity(const DiscreteField& u, int f) {
  const Face& face = u.mesh->face(f);
  if (!face.interior()) return 0.0;
  return 0.5 * (u.cell_vector(face.owner) + u.cell_vector(face.neighbor)).dot(face.normal);
}

/// Element divergence: exact for CR and RT0, face-average finite volume
/// divergence for QhVector.
inline DiscreteField div_h(const DiscreteField& u) {
  const Mesh& mesh = *u.mesh;
  DiscreteField out(Space::QhScalar, u.mesh);
  for (int k = 0; k < mesh.num_cells(); ++k) {
    const Cell& c = mesh.cell(k);
    double s = 0.0;
    switch (u.space) {
      case Space::CR: {
        const auto g = basis::cr_gradients(c);
        for (int i = 0; i < 3; ++i) s += g[i].dot(u.face_vector(c.faces[i]));
        break;
      }
      case Space::RT0:
        for (int i = 0; i < mesh.faces_per_cell(); ++i) s += c.orientation[i] * u.dofs[c.faces[i]];
        s /= c.measure;
        break;
      case Space::QhVector:
        for (int i = 0; i < mesh.faces_per_cell(); ++i) {
          const Face& face = mesh.face(c.faces[i]);
          s += c.orientation[i] * face.measure * average_normal_velocity(u, c.faces[i]);
        }
        s /= c.measure;
        break;
      default: throw SpaceMismatch(std::string("div_h: unsupported space ") + to_string(u.space));
    }
    out.dofs[k] = s;
  }
  return out;
}

/// Element-wise scalar curl d1 B2 - d2 B1 of an RT0 field. Both local RT0
/// spaces are spanned by constants and x-type fields, so this vanishes.
inline DiscreteField curl_scalar(const DiscreteField& b) {
  require_space(b, Space::RT0, "curl_scalar");
  // triangles: curl (x - p) = 0 for every local shape function;
  // rectangles: B1 depends on x1 only and B2 on x2 only
  return DiscreteField(Space::QhScalar, b.mesh);
}

/// Vector curl of a Nodal field, returned in RT0: flux through a -> b is E(b) - E(a).
inline DiscreteField curl_vector(const DiscreteField& e) {
  require_space(e, Space::Nodal, "curl_vector");
  const Mesh& mesh = *e.mesh;
  DiscreteField out(Space::RT0, e.mesh);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    out.dofs[f] = e.dofs[face.vertices[1]] - e.dofs[face.vertices[0]];
  }
  return out;
}

/// Element averages of a CR field.
inline DiscreteField hat(const DiscreteField& u) {
  require_space(u, Space::CR, "hat");
  const Mesh& mesh = *u.mesh;
  DiscreteField out(Space::QhVector, u.mesh);
  for (int k = 0; k < mesh.num_cells(); ++k) {
    const Cell& c = mesh.cell(k);
    out.dofs.segment<2>(2 * k) =
        (u.face_vector(c.faces[0]) + u.face_vector(c.faces[1]) + u.face_vector(c.faces[2])) / 3.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traces, jumps and averages
// ---------------------------------------------------------------------------

template <class T>
struct FaceTrace {
  T in;
  T out;
  T jump;  // out - in
  T avg;
};

template <class T>
FaceTrace<T> make_trace(T in, T out) {
  return {in, out, T(out - in), T(0.5 * (out + in))};
}

/// Face-mean trace of a scalar field from the owner (in) and neighbor (out)
/// side. Exterior faces need the outside value supplied by the boundary rule.
inline FaceTrace<double> trace_jump_avg(const DiscreteField& f, int face_id,
                                        std::optional<double> boundary_value = std::nullopt) {
  const Mesh& mesh = *f.mesh;
  const Face& face = mesh.face(face_id);
  auto side_mean = [&](int k, const Vec2& a, const Vec2& b) {
    const Cell& c = mesh.cell(k);
    const auto mid = basis::reference_point(c, mesh.shape(), 0.5 * (a + b));
    if (f.space == Space::Nodal) {
      // mean of a linear trace = average of the endpoint values
      return 0.5 * (eval_scalar(f, k, basis::reference_point(c, mesh.shape(), a)) +
                    eval_scalar(f, k, basis::reference_point(c, mesh.shape(), b)));
    }
    return eval_scalar(f, k, mid);
  };
  const double in = side_mean(face.owner, face.points[0], face.points[1]);
  double out;
  if (face.interior()) {
    out = side_mean(face.neighbor, face.points[0] + face.neighbor_shift,
                    face.points[1] + face.neighbor_shift);
  } else if (boundary_value) {
    out = *boundary_value;
  } else {
    throw std::invalid_argument("trace_jump_avg: exterior face needs a boundary value");
  }
  return make_trace(in, out);
}

/// Face-mean trace of a vector field (QhVector, CR or RT0).
inline FaceTrace<Vec2> trace_jump_avg_vector(
    const DiscreteField& f, int face_id, std::optional<Vec2> boundary_value = std::nullopt) {
  const Mesh& mesh = *f.mesh;
  const Face& face = mesh.face(face_id);
  // midpoint evaluation is exact for the face mean of affine traces
  auto side_mean = [&](int k, const Vec2& mid) {
    return eval_vector(f, k, basis::reference_point(mesh.cell(k), mesh.shape(), mid));
  };
  const Vec2 in = side_mean(face.owner, face.center);
  Vec2 out;
  if (face.interior()) {
    out = side_mean(face.neighbor, face.center + face.neighbor_shift);
  } else if (boundary_value) {
    out = *boundary_value;
  } else {
    throw std::invalid_argument("trace_jump_avg: exterior face needs a boundary value");
  }
  return make_trace<Vec2>(in, out);
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// Integral of g(k, q) over the domain with the given reference rule.
template <class Integrand>
double integrate(const Mesh& mesh, const std::vector<quadrature::RefPoint>& rule, Integrand&& g) {
  double total = 0.0;
  for (int k = 0; k < mesh.num_cells(); ++k) {
    double s = 0.0;
    for (const auto& q : rule) s += q.weight * g(k, q);
    total += s * mesh.cell(k).measure;
  }
  return total;
}

/// L2 norm of a discrete field (exact for all supported spaces).
inline double l2_norm(const DiscreteField& f) {
  const Mesh& mesh = *f.mesh;
  const auto rule = quadrature::exact_rule(mesh.shape());
  const bool vec = f.space == Space::QhVector || f.space == Space::CR || f.space == Space::RT0;
  return std::sqrt(integrate(mesh, rule, [&](int k, const auto& q) {
    return vec ? eval_vector(f, k, q).squaredNorm() : std::pow(eval_scalar(f, k, q), 2);
  }));
}

}  // namespace mhdfvfe
