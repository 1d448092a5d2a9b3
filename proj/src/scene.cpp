#include "orthosect/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace orthosect {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the first occurrence of a quoted key; 0 when not found.
int line_of_key(const std::string& text, const std::string& key) {
  if (key.empty()) return 0;
  const auto pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class SchemaReader {
 public:
  explicit SchemaReader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& key, const std::string& msg) const {
    std::ostringstream out;
    const int line = line_of_key(text_, key);
    if (line > 0) out << "line " << line << ": ";
    out << field << ": " << msg;
    throw GeometryError(ErrorKind::Input, out.str());
  }

  double number(const json& v, const std::string& field, const std::string& key) const {
    if (!v.is_number()) fail(field, key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, key, "non-finite number");
    return x;
  }

  Point point(const json& v, const std::string& field, const std::string& key) const {
    if (!v.is_array() || v.size() != 3) fail(field, key, "expected an array of 3 coordinates");
    return {number(v[0], field + "[0]", key), number(v[1], field + "[1]", key), number(v[2], field + "[2]", key)};
  }

  std::array<Point, 4> four_points(const json& v, const std::string& field, const std::string& key) const {
    if (!v.is_array()) fail(field, key, "expected an array of 4 points");
    if (v.size() != 4)
      fail(field, key, "expected 4 points, got " + std::to_string(v.size()));
    std::array<Point, 4> pts;
    for (size_t k = 0; k < 4; ++k) pts[k] = point(v[k], field + "[" + std::to_string(k) + "]", key);
    return pts;
  }

 private:
  const std::string& text_;
};

json point_json(const Point& p) { return json::array({p.x(), p.y(), p.z()}); }

json points_json(const std::array<Point, 4>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(point_json(p));
  return out;
}

}  // namespace

const Tetrahedron& Scene::tetrahedron(const std::string& name) const {
  const auto it = tetrahedra.find(name);
  if (it == tetrahedra.end()) throw GeometryError(ErrorKind::Input, "unknown tetrahedron '" + name + "'");
  return it->second;
}

Tolerance Scene::tolerance() const {
  Tolerance tol;
  if (eps_abs) tol.eps_abs = *eps_abs;
  if (eps_rel) tol.eps_rel = *eps_rel;
  if (const auto env = eps_from_environment()) tol.eps_rel = *env;
  return tol;
}

std::optional<double> eps_from_environment() {
  const char* raw = std::getenv("ORTHOLOG_EPS");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const double value = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !std::isfinite(value) || value <= 0.0)
    throw GeometryError(ErrorKind::Input, std::string("ORTHOLOG_EPS: expected a positive number, got '") + raw + "'");
  return value;
}

Scene parse_scene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream out;
    out << "line " << line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0) << ": malformed JSON: " << e.what();
    throw GeometryError(ErrorKind::Input, out.str());
  }
  const SchemaReader rd(text);
  if (!doc.is_object()) rd.fail("<root>", "", "expected an object");

  Scene scene;
  for (const auto& [key, value] : doc.items()) {
    if (key == "tetrahedra") {
      if (!value.is_object()) rd.fail("tetrahedra", key, "expected an object of name -> 4x3 array");
      for (const auto& [name, verts] : value.items()) {
        const auto pts = rd.four_points(verts, "tetrahedra." + name, name);
        scene.tetrahedra.emplace(name, Tetrahedron(pts));
      }
    } else if (key == "chains") {
      if (!value.is_object()) rd.fail("chains", key, "expected an object of name -> chain");
      for (const auto& [name, chain] : value.items()) {
        const std::string field = "chains." + name;
        if (!chain.is_object()) rd.fail(field, name, "expected an object with 'host' and 'sources'");
        ChainRecord rec;
        bool has_host = false, has_sources = false;
        for (const auto& [ck, cv] : chain.items()) {
          if (ck == "host") {
            if (!cv.is_string()) rd.fail(field + ".host", name, "expected a tetrahedron name");
            rec.host = cv.get<std::string>();
            has_host = true;
          } else if (ck == "sources") {
            rec.sources = rd.four_points(cv, field + ".sources", name);
            has_sources = true;
          } else {
            rd.fail(field + "." + ck, ck, "unknown field");
          }
        }
        if (!has_host || !has_sources) rd.fail(field, name, "requires 'host' and 'sources'");
        scene.chains.emplace(name, rec);
      }
    } else if (key == "tolerance") {
      if (!value.is_object()) rd.fail("tolerance", key, "expected an object");
      for (const auto& [tk, tv] : value.items()) {
        if (tk != "eps_abs" && tk != "eps_rel") rd.fail("tolerance." + tk, tk, "unknown field");
        const double x = rd.number(tv, "tolerance." + tk, tk);
        if (x <= 0.0) rd.fail("tolerance." + tk, tk, "must be positive");
        (tk == "eps_abs" ? scene.eps_abs : scene.eps_rel) = x;
      }
    } else if (key == "metadata") {
      if (!value.is_object()) rd.fail("metadata", key, "expected an object");
      SceneMetadata meta;
      for (const auto& [mk, mv] : value.items()) {
        if (mk == "description") {
          if (!mv.is_string()) rd.fail("metadata.description", mk, "expected a string");
          meta.description = mv.get<std::string>();
        } else if (mk == "seed") {
          if (!mv.is_number_unsigned()) rd.fail("metadata.seed", mk, "expected a non-negative integer");
          meta.seed = mv.get<std::uint64_t>();
        } else {
          rd.fail("metadata." + mk, mk, "unknown field");
        }
      }
      scene.metadata = meta;
    } else {
      rd.fail(key, key, "unknown top-level field");
    }
  }
  if (!doc.contains("tetrahedra")) rd.fail("tetrahedra", "", "missing required field");
  for (const auto& [name, rec] : scene.chains)
    if (!scene.tetrahedra.count(rec.host))
      rd.fail("chains." + name + ".host", name, "unknown tetrahedron '" + rec.host + "'");
  return scene;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GeometryError(ErrorKind::Input, "cannot read scene file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

std::string dump_scene(const Scene& scene) {
  json doc = json::object();
  doc["tetrahedra"] = json::object();
  for (const auto& [name, t] : scene.tetrahedra) doc["tetrahedra"][name] = points_json(t.vertices());
  if (!scene.chains.empty()) {
    doc["chains"] = json::object();
    for (const auto& [name, rec] : scene.chains)
      doc["chains"][name] = {{"host", rec.host}, {"sources", points_json(rec.sources)}};
  }
  if (scene.eps_abs || scene.eps_rel) {
    doc["tolerance"] = json::object();
    if (scene.eps_abs) doc["tolerance"]["eps_abs"] = *scene.eps_abs;
    if (scene.eps_rel) doc["tolerance"]["eps_rel"] = *scene.eps_rel;
  }
  if (scene.metadata) {
    doc["metadata"] = json::object();
    if (scene.metadata->description) doc["metadata"]["description"] = *scene.metadata->description;
    if (scene.metadata->seed) doc["metadata"]["seed"] = *scene.metadata->seed;
  }
  return doc.dump(2) + "\n";
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw GeometryError(ErrorKind::Input, "cannot write scene file '" + path + "'");
  out << dump_scene(scene);
}

}  // namespace orthosect
