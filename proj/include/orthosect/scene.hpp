#pragma once

#include "orthosect/geom.hpp"
#include "orthosect/orthology.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace orthosect {

/// Pedal chain stored by its four sources on the faces of a named host.
struct ChainRecord {
  std::string host;
  std::array<Point, 4> sources{};
};

struct SceneMetadata {
  std::optional<std::string> description;
  std::optional<std::uint64_t> seed;
};

struct Scene {
  std::map<std::string, Tetrahedron> tetrahedra;
  std::map<std::string, ChainRecord> chains;
  std::optional<double> eps_abs;
  std::optional<double> eps_rel;
  std::optional<SceneMetadata> metadata;

  const Tetrahedron& tetrahedron(const std::string& name) const;
  /// Defaults overridden by the scene, then by ORTHOLOG_EPS.
  Tolerance tolerance() const;
};

/// Errors carry ErrorKind::Input and a "line N: field: message" diagnostic.
Scene parse_scene(const std::string& text);
Scene load_scene(const std::string& path);
std::string dump_scene(const Scene& scene);
void save_scene(const Scene& scene, const std::string& path);

/// Value of ORTHOLOG_EPS, if set. Throws Input for unparsable values.
std::optional<double> eps_from_environment();

}  // namespace orthosect
