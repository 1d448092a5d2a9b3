#pragma once

#include "orthosect/analysis.hpp"
#include "orthosect/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace orthosect {

struct PedalFigure {
  Point source;
  std::array<Point, 3> feet;
  std::optional<Circle3D> circle;  // absent when the feet are collinear
};

/// 2-D content of one face plane of a tetrahedron.
struct FaceDiagram {
  FaceFrame frame;
  std::array<Point, 3> triangle;
  std::vector<PedalFigure> pedals;
  const CurveTrace* curve = nullptr;
};

/// Face `face` (0-based opposite vertex) of `host`. With a partner, adds the
/// pedal figure of the partner vertex projected onto that face and of its
/// isogonal conjugate.
FaceDiagram face_diagram(const Tetrahedron& host, int face, const Tetrahedron* partner,
                         const Tolerance& tol);

/// Layers: triangle, feet, sources, circles, curve. One path per polyline.
std::string render_svg(const FaceDiagram& diagram, int precision = 6);

struct ObjOptions {
  int sphere_resolution = 16;  // latitude bands; longitude uses twice as many
};

/// Wireframe of every tetrahedron. With `pair`, adds the six labeled
/// intersection points and the tessellated carrier.
std::string render_obj(const Scene& scene, const std::optional<std::pair<std::string, std::string>>& pair,
                       const Tolerance& tol, const ObjOptions& options = {});

}  // namespace orthosect
