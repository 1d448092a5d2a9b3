#include "orthosect/orthology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace orthosect {

int edge_index(int a, int b) {
  if (a > b) std::swap(a, b);
  for (int e = 0; e < 6; ++e)
    if (kEdges[e].i == a && kEdges[e].j == b) return e;
  throw GeometryError(ErrorKind::Precondition, "edge_index: not an edge of a tetrahedron");
}

std::string edge_label(int edge) {
  const auto& e = kEdges.at(static_cast<size_t>(edge));
  return std::to_string(e.i + 1) + std::to_string(e.j + 1);
}

std::array<int, 3> opposite_face(int vertex) {
  std::array<int, 3> face{};
  int n = 0;
  for (int v = 0; v < 4; ++v)
    if (v != vertex) face[static_cast<size_t>(n++)] = v;
  return face;
}

Tetrahedron::Tetrahedron(const std::array<Point, 4>& vertices) : vertices_(vertices) {
  for (const auto& p : vertices_)
    if (!all_finite(p)) throw GeometryError(ErrorKind::Input, "tetrahedron vertex is not finite");
  signed_volume_ = (vertices_[1] - vertices_[0])
                       .dot((vertices_[2] - vertices_[0]).cross(vertices_[3] - vertices_[0])) /
                   6.0;
}

double Tetrahedron::diameter() const { return scene_diameter(vertices_); }

bool Tetrahedron::is_flat(const Tolerance& tol) const {
  const double s = tol.scene_scale;
  return std::abs(signed_volume_) < tol.eps_rel * s * s * s;
}

Point Tetrahedron::centroid() const {
  return (vertices_[0] + vertices_[1] + vertices_[2] + vertices_[3]) / 4.0;
}

Plane Tetrahedron::face_plane(int opposite_vertex) const {
  const auto f = opposite_face(opposite_vertex);
  return Plane::through((*this)[f[0]], (*this)[f[1]], (*this)[f[2]]);
}

Line Tetrahedron::edge_line(int edge) const {
  const auto& e = kEdges.at(static_cast<size_t>(edge));
  return Line::through((*this)[e.i], (*this)[e.j]);
}

double Tetrahedron::edge_length(int edge) const {
  const auto& e = kEdges.at(static_cast<size_t>(edge));
  return ((*this)[e.i] - (*this)[e.j]).norm();
}

Tetrahedron Tetrahedron::permuted(const std::array<int, 4>& perm) const {
  std::array<Point, 4> v;
  for (size_t k = 0; k < 4; ++k) v[k] = vertices_[static_cast<size_t>(perm[k])];
  return Tetrahedron(v);
}

Tetrahedron Tetrahedron::translated(const Vec3& t) const {
  std::array<Point, 4> v = vertices_;
  for (auto& p : v) p += t;
  return Tetrahedron(v);
}

double pair_scale(const Tetrahedron& a, const Tetrahedron& b) {
  std::array<Point, 8> pts;
  for (size_t i = 0; i < 4; ++i) {
    pts[i] = a.vertices()[i];
    pts[i + 4] = b.vertices()[i];
  }
  return scene_diameter(pts);
}

std::array<EdgePairing, 6> edge_pairings() {
  std::array<EdgePairing, 6> out{};
  for (int e = 0; e < 6; ++e) out[static_cast<size_t>(e)] = {kEdges[e], kEdges[complement(e)]};
  return out;
}

std::array<double, 6> edge_orthogonality_residuals(const Tetrahedron& a, const Tetrahedron& b) {
  std::array<double, 6> out{};
  for (int e = 0; e < 6; ++e) {
    const double la = a.edge_length(e);
    const double lb = b.edge_length(complement(e));
    if (!(la > 0.0))
      throw GeometryError(ErrorKind::Degenerate, "zero-length edge A" + edge_label(e));
    if (!(lb > 0.0))
      throw GeometryError(ErrorKind::Degenerate, "zero-length edge B" + edge_label(complement(e)));
    const auto& ea = kEdges[e];
    const auto& eb = kEdges[complement(e)];
    const Vec3 da = a[ea.i] - a[ea.j];
    const Vec3 db = b[eb.i] - b[eb.j];
    out[static_cast<size_t>(e)] = std::abs(da.dot(db)) / (la * lb);
  }
  return out;
}

namespace {

std::array<Line, 4> perpendiculars(const Tetrahedron& from, const Tetrahedron& to) {
  std::array<Line, 4> lines;
  for (int i = 0; i < 4; ++i)
    lines[static_cast<size_t>(i)] = Line::from_direction(from[i], to.face_plane(i).normal);
  return lines;
}

}  // namespace

OrthologyReport orthology_centers(const Tetrahedron& a, const Tetrahedron& b, const Tolerance& tol) {
  OrthologyReport report;
  report.residuals = edge_orthogonality_residuals(a, b);
  const double worst = *std::max_element(report.residuals.begin(), report.residuals.end());
  if (worst > tol.eps_rel) {
    std::ostringstream msg;
    msg << "not orthologic: residuals";
    for (int e = 0; e < 6; ++e) msg << ' ' << edge_label(e) << '=' << report.residuals[static_cast<size_t>(e)];
    throw GeometryError(ErrorKind::NotOrthologic, msg.str());
  }
  if (a.is_flat(tol) || b.is_flat(tol))
    throw GeometryError(ErrorKind::FlatPartner, "orthology centers undefined for a flat tetrahedron");

  report.perpendiculars_a = perpendiculars(a, b);
  report.perpendiculars_b = perpendiculars(b, a);
  const auto ca = concurrency_point(report.perpendiculars_a, tol);
  const auto cb = concurrency_point(report.perpendiculars_b, tol);
  report.center_a = ca.point;
  report.center_b = cb.point;
  report.spread_a = ca.spread;
  report.spread_b = cb.spread;
  return report;
}

std::array<double, 4> default_offsets(const Tetrahedron& a, const Point& center) {
  std::array<double, 4> offsets{};
  for (int i = 0; i < 4; ++i) {
    const Vec3 n = (a[i] - center).normalized();
    offsets[static_cast<size_t>(i)] = n.dot(a[i]);
  }
  return offsets;
}

Tetrahedron construct_orthologic(const Tetrahedron& a, const Point& center,
                                 const std::array<double, 4>& offsets, const Tolerance& tol) {
  std::array<Plane, 4> faces;
  for (int i = 0; i < 4; ++i) {
    const Vec3 n = a[i] - center;
    if (n.norm() <= tol.eps_abs * tol.scene_scale)
      throw GeometryError(ErrorKind::Precondition, "orthology center coincides with a vertex");
    faces[static_cast<size_t>(i)] = Plane{n.normalized(), offsets[static_cast<size_t>(i)]};
  }
  std::array<Point, 4> vertices;
  for (int m = 0; m < 4; ++m) {
    const auto f = opposite_face(m);
    vertices[static_cast<size_t>(m)] =
        meet_planes(faces[static_cast<size_t>(f[0])], faces[static_cast<size_t>(f[1])],
                    faces[static_cast<size_t>(f[2])], tol);
  }
  // Four concurrent planes collapse every vertex onto the common point.
  if (std::abs(faces[3].signed_distance(vertices[3])) <= tol.eps_abs * tol.scene_scale)
    throw GeometryError(ErrorKind::Degenerate, "all four face planes pass through one point");
  return Tetrahedron(vertices);
}

Labeling find_labeling(const Tetrahedron& a, const Tetrahedron& b, double tie_tolerance) {
  std::array<int, 4> perm{0, 1, 2, 3};
  std::vector<std::pair<double, std::array<int, 4>>> scored;
  do {
    const auto r = edge_orthogonality_residuals(a, b.permuted(perm));
    scored.emplace_back(*std::max_element(r.begin(), r.end()), perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const auto best = std::min_element(scored.begin(), scored.end(),
                                     [](const auto& x, const auto& y) { return x.first < y.first; });
  Labeling out;
  out.permutation = best->second;
  out.max_residual = best->first;
  for (const auto& [score, p] : scored)
    if (score <= best->first + tie_tolerance) out.ties.push_back(p);
  return out;
}

}  // namespace orthosect
