#include "orthosect/geom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace orthosect {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::SimsonDegenerate: return "simson-degenerate";
    case ErrorKind::NotOrthologic: return "not-orthologic";
    case ErrorKind::FlatPartner: return "flat-partner";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Postcondition: return "postcondition";
    case ErrorKind::Input: return "input";
  }
  return "unknown";
}

double scene_diameter(std::span<const Point> points) {
  double d = 0.0;
  for (size_t i = 0; i < points.size(); ++i)
    for (size_t j = i + 1; j < points.size(); ++j)
      d = std::max(d, (points[i] - points[j]).norm());
  return d > 0.0 ? d : 1.0;
}

bool all_finite(const Point& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

Line Line::through(const Point& p, const Point& q) {
  Vec3 d = q - p;
  const double n = d.norm();
  if (!(n > 0.0))
    throw GeometryError(ErrorKind::Degenerate, "line through coincident points");
  return Line{p.squaredNorm() <= q.squaredNorm() ? p : q, d / n};
}

Line Line::from_direction(const Point& anchor, const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 0.0))
    throw GeometryError(ErrorKind::Degenerate, "line with zero direction");
  return Line{anchor, direction / n};
}

Plane Plane::through(const Point& p, const Point& q, const Point& r) {
  Vec3 n = (q - p).cross(r - p);
  const double len = n.norm();
  if (!(len > 0.0))
    throw GeometryError(ErrorKind::Degenerate, "plane through collinear points");
  n /= len;
  return Plane{n, n.dot(p + q + r) / 3.0};
}

Plane Plane::from_normal(const Vec3& normal, const Point& on_plane) {
  const double len = normal.norm();
  if (!(len > 0.0))
    throw GeometryError(ErrorKind::Degenerate, "plane with zero normal");
  Vec3 n = normal / len;
  return Plane{n, n.dot(on_plane)};
}

double SphereOrPlane::signed_residual(const Point& p) const {
  if (is_sphere()) {
    const auto& s = sphere();
    return (p - s.center).norm() - s.radius;
  }
  return plane().signed_distance(p);
}

ClosestPoints closest_points(const Line& l1, const Line& l2, const Tolerance& tol) {
  ClosestPoints out;
  const Vec3& d1 = l1.direction;
  const Vec3& d2 = l2.direction;
  const Vec3 w0 = l1.anchor - l2.anchor;
  const double b = d1.dot(d2);
  out.cos_angle = std::abs(b);
  const double sin_angle = d1.cross(d2).norm();

  if (sin_angle <= tol.eps_abs) {
    out.parallel = true;
    out.p1 = l1.anchor;
    out.p2 = foot_on_line(l1.anchor, l2);
    out.gap = (out.p1 - out.p2).norm();
    if (out.gap <= tol.eps_abs * tol.scene_scale) {
      out.identical = true;
      out.p2 = out.p1;
      out.gap = 0.0;
    }
    return out;
  }

  const double d = d1.dot(w0);
  const double e = d2.dot(w0);
  const double denom = 1.0 - b * b;
  const double s = (b * e - d) / denom;
  const double u = (e - b * d) / denom;
  out.p1 = l1.at(s);
  out.p2 = l2.at(u);
  out.gap = (out.p1 - out.p2).norm();
  return out;
}

Point project_to_plane(const Point& p, const Plane& plane) {
  return p - plane.signed_distance(p) * plane.normal;
}

Point foot_on_line(const Point& p, const Line& line) {
  return line.anchor + (p - line.anchor).dot(line.direction) * line.direction;
}

double distance_to_line(const Point& p, const Line& line) {
  return (p - foot_on_line(p, line)).norm();
}

Circle3D circle_through(const Point& p1, const Point& p2, const Point& p3,
                        const Tolerance& tol) {
  const Vec3 u = p2 - p1;
  const Vec3 v = p3 - p1;
  const Vec3 w = u.cross(v);
  const double longest = std::max({u.norm(), v.norm(), (p3 - p2).norm()});
  // |w| / longest edge is the smallest triangle height.
  if (!(longest > 0.0) || w.norm() / longest <= tol.eps_rel * tol.scene_scale)
    throw GeometryError(ErrorKind::Degenerate, "circle through collinear points");

  const double w2 = w.squaredNorm();
  const Vec3 offset = (u.squaredNorm() * v.cross(w) + v.squaredNorm() * w.cross(u)) / (2.0 * w2);
  Circle3D c;
  c.center = p1 + offset;
  c.radius = offset.norm();
  c.carrier = Plane::from_normal(w, p1);
  return c;
}

namespace {

Plane fit_plane(const std::array<Point, 4>& pts, const Tolerance& tol) {
  Vec3 best = Vec3::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (int c = b + 1; c < 4; ++c) {
        Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
        if (n.norm() > best.norm()) best = n;
      }
  const double longest = scene_diameter(pts);
  if (best.norm() / longest <= tol.eps_rel * tol.scene_scale)
    throw GeometryError(ErrorKind::Degenerate, "sphere_through: points are collinear");
  best.normalize();
  double offset = 0.0;
  for (const auto& p : pts) offset += best.dot(p);
  return Plane{best, offset / 4.0};
}

}  // namespace

SphereOrPlane sphere_through(const Point& p1, const Point& p2, const Point& p3,
                             const Point& p4, const Tolerance& tol) {
  const std::array<Point, 4> pts{p1, p2, p3, p4};
  const double coincide = tol.eps_abs * tol.scene_scale;
  for (int a = 0; a < 4; ++a) {
    int same = 0;
    for (int b = 0; b < 4; ++b)
      if ((pts[a] - pts[b]).norm() <= coincide) ++same;
    if (same >= 3)
      throw GeometryError(ErrorKind::Degenerate, "sphere_through: three or more coincident points");
  }

  Eigen::Matrix3d m;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    const Vec3 q = pts[i + 1] - p1;
    m.row(i) = 2.0 * q.transpose();
    rhs(i) = q.squaredNorm();
  }
  // Coplanarity is judged by the smallest height of the simplex, a distance
  // comparable with the residuals the carrier is later checked against.
  double largest_face = 0.0;
  for (int skip = 0; skip < 4; ++skip) {
    std::array<Point, 3> f;
    for (int k = 0, j = 0; k < 4; ++k)
      if (k != skip) f[static_cast<size_t>(j++)] = pts[static_cast<size_t>(k)];
    largest_face = std::max(largest_face, (f[1] - f[0]).cross(f[2] - f[0]).norm());
  }
  const double height = largest_face > 0.0 ? std::abs(m.determinant()) / 8.0 / largest_face : 0.0;
  const double scale = tol.scene_scale;
  if (height < tol.eps_rel * scale) return fit_plane(pts, tol);

  const Vec3 rel = m.fullPivLu().solve(rhs);
  const double radius = rel.norm();
  if (!std::isfinite(radius) || radius > 1e6 * scale) return fit_plane(pts, tol);
  return Sphere{p1 + rel, radius};
}

Point meet_planes(const Plane& pl1, const Plane& pl2, const Plane& pl3, const Tolerance& tol) {
  Eigen::Matrix3d n;
  n.row(0) = pl1.normal.transpose();
  n.row(1) = pl2.normal.transpose();
  n.row(2) = pl3.normal.transpose();
  const double det = n.determinant();
  if (std::abs(det) <= tol.eps_abs) {
    std::ostringstream msg;
    msg << "meet_planes: normals nearly coplanar (det = " << det << ")";
    throw GeometryError(ErrorKind::Degenerate, msg.str());
  }
  return n.fullPivLu().solve(Eigen::Vector3d(pl1.offset, pl2.offset, pl3.offset));
}

Concurrency concurrency_point(std::span<const Line> lines, const Tolerance& tol) {
  if (lines.size() < 2)
    throw GeometryError(ErrorKind::Precondition, "concurrency_point needs at least two lines");
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& l : lines) {
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - l.direction * l.direction.transpose();
    m += proj;
    rhs += proj * l.anchor;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
  // All-parallel lines leave one direction unconstrained.
  if (eig.eigenvalues()(0) <= tol.eps_abs * static_cast<double>(lines.size()))
    throw GeometryError(ErrorKind::FlatPartner, "concurrency_point: lines are parallel (point at infinity)");

  Concurrency out;
  out.point = m.ldlt().solve(rhs);
  double sum = 0.0;
  for (const auto& l : lines) {
    const double d = distance_to_line(out.point, l);
    sum += d * d;
  }
  out.spread = std::sqrt(sum / static_cast<double>(lines.size())) / tol.scene_scale;
  return out;
}

}  // namespace orthosect

namespace orthosect {

CarrierFit fit_carrier(std::span<const Point> points, const Tolerance& tol) {
  if (points.size() < 4)
    throw GeometryError(ErrorKind::Precondition, "fit_carrier needs at least four points");
  const size_t n = points.size();
  std::array<size_t, 4> best{0, 1, 2, 3};
  double best_volume = -1.0;
  for (size_t a = 0; a < n; ++a)
    for (size_t b = a + 1; b < n; ++b)
      for (size_t c = b + 1; c < n; ++c)
        for (size_t d = c + 1; d < n; ++d) {
          const double v = std::abs((points[b] - points[a])
                                        .dot((points[c] - points[a]).cross(points[d] - points[a])));
          if (v > best_volume) {
            best_volume = v;
            best = {a, b, c, d};
          }
        }
  CarrierFit fit{sphere_through(points[best[0]], points[best[1]], points[best[2]], points[best[3]], tol),
                 {}, 0.0};
  if (fit.carrier.is_plane()) {
    // Refit the plane through the best-spread triple of all points.
    Vec3 normal = Vec3::Zero();
    for (size_t a = 0; a < n; ++a)
      for (size_t b = a + 1; b < n; ++b)
        for (size_t c = b + 1; c < n; ++c) {
          const Vec3 w = (points[b] - points[a]).cross(points[c] - points[a]);
          if (w.norm() > normal.norm()) normal = w;
        }
    if (normal.norm() > 0.0) {
      normal.normalize();
      double offset = 0.0;
      for (const auto& p : points) offset += normal.dot(p);
      fit.carrier = Plane{normal, offset / static_cast<double>(n)};
    }
  }
  for (const auto& p : points) {
    const double r = fit.carrier.signed_residual(p);
    fit.residuals.push_back(r);
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  return fit;
}

double distance_to_circle(const Point& p, const Circle3D& circle) {
  const double h = circle.carrier.signed_distance(p);
  const Point q = p - h * circle.carrier.normal;
  const double rho = (q - circle.center).norm();
  return std::hypot(h, rho - circle.radius);
}

}  // namespace orthosect
