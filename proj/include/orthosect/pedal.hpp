#pragma once

#include "orthosect/geom.hpp"
#include "orthosect/orthology.hpp"

#include <array>
#include <vector>

namespace orthosect {

/// Feet of the perpendiculars from `source` onto the three edge lines of a
/// host triangle. Feet are ordered by edge (0,1), (0,2), (1,2).
struct PedalTriangle {
  Point source;
  std::array<Point, 3> face;
  std::array<Point, 3> feet;
};

/// With `strict`, a source farther than eps_abs from the face plane is
/// rejected; otherwise it is projected first.
PedalTriangle pedal_triangle(const Point& source, const std::array<Point, 3>& face,
                             const Tolerance& tol = {}, bool strict = false);

Circle3D circumcircle(const std::array<Point, 3>& face, const Tolerance& tol = {});

/// Throws SimsonDegenerate when the source is within 1e-7 scene units of the
/// circumcircle (the feet are then collinear).
Circle3D pedal_circle(const Point& source, const std::array<Point, 3>& face, const Tolerance& tol = {});

/// Reflection of the source in its pedal-circle center.
Point isogonal_conjugate(const Point& source, const std::array<Point, 3>& face,
                         const Tolerance& tol = {});

struct SourceRecovery {
  Point source;
  double spread = 0.0;  // normalized by scene_scale
};

/// Common point of the in-plane perpendiculars to the edges at the feet.
SourceRecovery recover_source(const std::array<Point, 3>& feet, const std::array<Point, 3>& face,
                              const Tolerance& tol = {});

/// Four pedal triangles on the faces of `host` sharing feet on common edges.
/// feet[e] lies on host edge kEdges[e]; sources[i] lies in the plane of the
/// face opposite host vertex i.
struct PedalChain {
  Tetrahedron host;
  std::array<Point, 6> feet{};
  std::array<Point, 4> sources{};
  double closure_spread = 0.0;  // scene units

  std::array<Point, 3> face(int i) const;
  /// Pedal triangle of sources[i] expressed through the shared feet.
  PedalTriangle triangle(int i) const;
};

/// Unit vector in the plane of host face (1,2,4) perpendicular to edge 12 and
/// pointing toward vertex 4; the direction of the chain parameter t.
Vec3 chain_direction(const Tetrahedron& host);

/// Completes the chain from the source on face (1,2,3) and the offset t of
/// the source on face (1,2,4) along chain_direction from the foot on edge 12.
PedalChain complete_chain(const Tetrahedron& host, const Point& b4, double t, const Tolerance& tol);

/// Chain from four prescribed sources; feet shared by two faces are averaged
/// and their disagreement recorded as closure_spread.
PedalChain chain_from_sources(const Tetrahedron& host, const std::array<Point, 4>& sources,
                              const Tolerance& tol);

/// Chain of an orthosecting pair: feet at the edge intersections, sources at
/// the projections of B's vertices onto the opposite face planes of A.
PedalChain extract_chain(const Tetrahedron& host, const Tetrahedron& partner, const Tolerance& tol);

/// Parameters t making the five feet other than the one on edge 34
/// co-spherical (or co-planar). Sorted ascending, in scene units.
std::vector<double> spherical_parameters(const Tetrahedron& host, const Point& b4, const Tolerance& tol);

/// One signed value per spherical parameter: deviation of the foot on edge
/// 34 from the sphere of the other five, over scene_scale.
std::vector<double> chain_sphere_residual(const Tetrahedron& host, const Point& b4, const Tolerance& tol);

/// Residual for a single, already chosen, parameter t.
double chain_sphere_residual_at(const Tetrahedron& host, const Point& b4, double t, const Tolerance& tol);

struct SphericalChain {
  PedalChain chain;
  SphereOrPlane carrier;
  double max_residual = 0.0;
};

/// Wraps a chain whose six feet share a sphere or plane; throws
/// Precondition otherwise.
SphericalChain make_spherical(const PedalChain& chain, const Tolerance& tol);

/// The unique partner whose face opposite B_i is spanned by the three feet on
/// the edges through A_i.
Tetrahedron reconstruct_tetrahedron(const SphericalChain& sc, const Tolerance& tol);

struct CircularNet {
  std::array<std::array<Point, 3>, 3> grid{};
  std::array<double, 4> residuals{};  // quads (0,0), (0,1), (1,0), (1,1)
};

/// 3x3 net around host edge `edge` (index into kEdges). For edge 12 with the
/// remaining vertices 3 < 4 the rows are (V13, A1, V14), (B*4, V12, B*3),
/// (V23, A2, V24).
CircularNet circular_net(const PedalChain& chain, int edge, const Tolerance& tol);

/// Distance of the fourth point from the circle through the other three,
/// using whichever triple is best conditioned.
double concyclicity_residual(const std::array<Point, 4>& quad, const Tolerance& tol);

}  // namespace orthosect
