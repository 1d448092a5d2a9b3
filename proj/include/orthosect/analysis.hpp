#pragma once

#include "orthosect/geom.hpp"
#include "orthosect/orthology.hpp"
#include "orthosect/pedal.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace orthosect {

struct SphereReport {
  std::vector<int> edges;          // A edges whose intersection points were used
  std::vector<Point> points;       // intersection points, same order
  SphereOrPlane carrier = Plane{Vec3::UnitZ(), 0.0};
  std::vector<double> residuals;   // signed, scene units
  double max_residual = 0.0;
  std::optional<Point> center_a;   // orthology centers, when both are finite
  std::optional<Point> center_b;
  std::optional<double> midpoint_gap;  // |carrier center - midpoint| / scene_scale
};

/// Common sphere of the intersection points of non-corresponding edges. With
/// `five_points` the pairing with the largest gap is left out.
SphereReport verify_sphere(const Tetrahedron& a, const Tetrahedron& b, const Tolerance& tol,
                           bool five_points = false);

struct Conjugation {
  Tetrahedron partner;
  PedalChain chain;  // chain of the reflected sources
};

/// Second partner of A obtained by reflecting each projected vertex of B in
/// the center of its pedal circle.
Conjugation conjugate(const Tetrahedron& a, const Tetrahedron& b, const Tolerance& tol);

/// Orthonormal frame of a face plane.
struct FaceFrame {
  Point origin;
  Vec3 e1;
  Vec3 e2;
  Vec3 normal;

  Point to_world(const Eigen::Vector2d& uv) const { return origin + uv.x() * e1 + uv.y() * e2; }
  Eigen::Vector2d to_face(const Point& p) const {
    const Vec3 d = p - origin;
    return {d.dot(e1), d.dot(e2)};
  }
};

struct Window {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;
};

struct Polyline {
  int branch = 0;  // spherical parameter root index
  bool closed = false;
  std::vector<Eigen::Vector2d> points;
};

struct CurveTrace {
  int face = 3;  // 0-based index of the host vertex opposite the traced face
  FaceFrame frame;
  Window window;
  int grid = 0;
  std::vector<Polyline> polylines;
  double residual_bound = 0.0;  // max |chain sphere residual| over all vertices

  size_t vertex_count() const;
};

/// Host relabeled so that `face` becomes vertex 4; the curve of the face is
/// then the curve of face (1,2,3) of the relabeled host.
Tetrahedron host_for_face(const Tetrahedron& a, int face);

FaceFrame face_frame(const Tetrahedron& a, int face);

/// Bounding box of the face triangle, inflated threefold about its center.
Window default_window(const Tetrahedron& a, int face);

CurveTrace trace_curve(const Tetrahedron& a, int face, const Window& window, int grid,
                       const Tolerance& tol, unsigned threads = 0);

struct LineHits {
  int count = 0;
  int flagged = 0;  // near-tangent hits, hits closer than one grid cell, open ends near the line
};

LineHits count_line_hits(const CurveTrace& trace, const Eigen::Vector2d& point,
                         const Eigen::Vector2d& direction);

struct DegreeEstimate {
  std::map<int, int> histogram;  // intersection count -> number of lines
  std::vector<LineHits> lines;
  int max_count = 0;
  bool nine_observed = false;
  bool nine_exceeded = false;
};

/// Exploratory statistics of intersections between the trace and random
/// lines through the window. Real counts only bound the degree from below.
DegreeEstimate estimate_degree(const CurveTrace& trace, int trials, std::uint64_t seed);

struct SequenceRun {
  std::vector<Tetrahedron> terms;
  std::vector<SphereReport> pair_reports;  // (B_m, B_m+1)
  double shared_residual = 0.0;            // all points against the first carrier, scene units
  std::vector<Point> centers;
  std::vector<Point> distinct_centers;
  double cluster_radius = 0.0;
  std::optional<int> failed_step;
  std::string failure;
};

/// B_{m+1} = conjugate of B_{m-1} with respect to host B_m, for m = 1..n-1.
SequenceRun iterate_sequence(const Tetrahedron& b0, const Tetrahedron& b1, int n, const Tolerance& tol,
                             double cluster_radius = 1e-6);

}  // namespace orthosect
