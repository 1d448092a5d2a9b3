#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace orthosect {

using Vec3 = Eigen::Vector3d;
using Point = Eigen::Vector3d;

enum class ErrorKind {
  Degenerate,        // collinear, coincident, singular configurations
  SimsonDegenerate,  // pedal source on the host circumcircle
  NotOrthologic,
  FlatPartner,       // orthology center at infinity
  Precondition,
  Conditioning,
  Postcondition,
  Input,
};

const char* to_string(ErrorKind kind);

class GeometryError : public std::runtime_error {
 public:
  GeometryError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Absolute/relative tolerances plus the scene diameter used to make
/// residuals scale-free.
struct Tolerance {
  double eps_abs = 1e-9;
  double eps_rel = 1e-7;
  double scene_scale = 1.0;

  Tolerance with_scale(double scale) const {
    Tolerance t = *this;
    t.scene_scale = scale;
    return t;
  }
};

/// Diameter of a point set (largest pairwise distance). Returns 1 for sets
/// whose diameter vanishes so that callers can always divide by it.
double scene_diameter(std::span<const Point> points);

bool all_finite(const Point& p);

struct Line {
  Point anchor;
  Vec3 direction;  // unit

  /// Line through two distinct points; the anchor is whichever input point is
  /// nearer the origin.
  static Line through(const Point& p, const Point& q);
  static Line from_direction(const Point& anchor, const Vec3& direction);

  Point at(double s) const { return anchor + s * direction; }
};

struct Plane {
  Vec3 normal;  // unit; plane is {x : normal.dot(x) == offset}
  double offset = 0.0;

  static Plane through(const Point& p, const Point& q, const Point& r);
  static Plane from_normal(const Vec3& normal, const Point& on_plane);

  double signed_distance(const Point& p) const { return normal.dot(p) - offset; }
};

struct Circle3D {
  Point center;
  double radius = 0.0;
  Plane carrier;
};

struct Sphere {
  Point center;
  double radius = 0.0;
};

/// Common carrier of a point set: a genuine sphere, or the plane it
/// degenerates to for flat configurations.
class SphereOrPlane {
 public:
  SphereOrPlane(Sphere s) : value_(s) {}
  SphereOrPlane(Plane p) : value_(p) {}

  bool is_sphere() const { return std::holds_alternative<Sphere>(value_); }
  bool is_plane() const { return std::holds_alternative<Plane>(value_); }
  const Sphere& sphere() const { return std::get<Sphere>(value_); }
  const Plane& plane() const { return std::get<Plane>(value_); }

  /// Signed deviation of p from the carrier: |p - c| - r for spheres, signed
  /// distance for planes.
  double signed_residual(const Point& p) const;

 private:
  std::variant<Sphere, Plane> value_;
};

struct ClosestPoints {
  Point p1;
  Point p2;
  double gap = 0.0;
  double cos_angle = 0.0;  // |d1 . d2|
  bool parallel = false;
  bool identical = false;
};

ClosestPoints closest_points(const Line& l1, const Line& l2, const Tolerance& tol = {});

Point project_to_plane(const Point& p, const Plane& plane);

Point foot_on_line(const Point& p, const Line& line);

/// Circle through three points. Throws Degenerate for collinear input.
Circle3D circle_through(const Point& p1, const Point& p2, const Point& p3,
                        const Tolerance& tol = {});

SphereOrPlane sphere_through(const Point& p1, const Point& p2, const Point& p3,
                             const Point& p4, const Tolerance& tol = {});

Point meet_planes(const Plane& pl1, const Plane& pl2, const Plane& pl3,
                  const Tolerance& tol = {});

struct Concurrency {
  Point point;
  double spread = 0.0;  // RMS distance to the lines / scene_scale
};

/// Least-squares common point of a set of lines.
Concurrency concurrency_point(std::span<const Line> lines, const Tolerance& tol = {});

double distance_to_line(const Point& p, const Line& line);

struct CarrierFit {
  SphereOrPlane carrier;
  std::vector<double> residuals;  // signed, one per input point, scene units
  double max_residual = 0.0;      // max |residual|
};

/// Sphere (or plane) through four or more points, anchored on the
/// best-conditioned 4-subset and checked against all of them.
CarrierFit fit_carrier(std::span<const Point> points, const Tolerance& tol = {});

/// 3-D distance from p to a circle.
double distance_to_circle(const Point& p, const Circle3D& circle);

}  // namespace orthosect
