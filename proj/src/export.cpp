#include "orthosect/export.hpp"

#include "orthosect/pedal.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace orthosect {

namespace {

std::string fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  std::string s(buf);
  // Keep goldens free of "-0.000".
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

class SvgWriter {
 public:
  explicit SvgWriter(int precision) : precision_(precision) {}

  // Face coordinates map to SVG with the y axis flipped.
  std::string xy(const Eigen::Vector2d& p) const {
    return fixed(p.x(), precision_) + "," + fixed(-p.y(), precision_);
  }
  std::string num(double x) const { return fixed(x, precision_); }

 private:
  int precision_;
};

}  // namespace

FaceDiagram face_diagram(const Tetrahedron& host, int face, const Tetrahedron* partner,
                         const Tolerance& tol) {
  FaceDiagram d;
  d.frame = face_frame(host, face);
  const auto f = opposite_face(face);
  d.triangle = {host[f[0]], host[f[1]], host[f[2]]};
  if (partner != nullptr) {
    const Point source = project_to_plane((*partner)[face], host.face_plane(face));
    const auto add = [&](const Point& p) {
      PedalFigure fig{p, pedal_triangle(p, d.triangle, tol).feet, std::nullopt};
      try {
        fig.circle = pedal_circle(p, d.triangle, tol);
      } catch (const GeometryError& e) {
        if (e.kind() != ErrorKind::SimsonDegenerate) throw;
      }
      d.pedals.push_back(fig);
    };
    add(source);
    if (d.pedals.back().circle) add(2.0 * d.pedals.back().circle->center - source);
  }
  return d;
}

std::string render_svg(const FaceDiagram& d, int precision) {
  const SvgWriter w(precision);
  std::array<Eigen::Vector2d, 3> tri;
  for (int k = 0; k < 3; ++k) tri[static_cast<size_t>(k)] = d.frame.to_face(d.triangle[static_cast<size_t>(k)]);

  Eigen::Vector2d lo = tri[0], hi = tri[0];
  const auto grow = [&](const Eigen::Vector2d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& p : tri) grow(p);
  for (const auto& fig : d.pedals) {
    grow(d.frame.to_face(fig.source));
    if (fig.circle) {
      const auto c = d.frame.to_face(fig.circle->center);
      grow(c - Eigen::Vector2d::Constant(fig.circle->radius));
      grow(c + Eigen::Vector2d::Constant(fig.circle->radius));
    }
  }
  if (d.curve) {
    grow(d.curve->window.lo);
    grow(d.curve->window.hi);
  }
  const double margin = 0.05 * (hi - lo).maxCoeff();
  lo -= Eigen::Vector2d::Constant(margin);
  hi += Eigen::Vector2d::Constant(margin);
  const double dot = 0.006 * (hi - lo).maxCoeff();

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"" << w.num(lo.x()) << ' '
      << w.num(-hi.y()) << ' ' << w.num(hi.x() - lo.x()) << ' ' << w.num(hi.y() - lo.y())
      << "\" preserveAspectRatio=\"xMidYMid meet\">\n";
  out << "<g id=\"triangle\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" vector-effect=\"non-scaling-stroke\">\n";
  out << "<polygon vector-effect=\"non-scaling-stroke\" points=\"" << w.xy(tri[0]) << ' ' << w.xy(tri[1]) << ' '
      << w.xy(tri[2]) << "\"/>\n</g>\n";

  out << "<g id=\"feet\" fill=\"#1f77b4\">\n";
  for (const auto& fig : d.pedals)
    for (const auto& foot : fig.feet) {
      const auto p = d.frame.to_face(foot);
      out << "<circle cx=\"" << w.num(p.x()) << "\" cy=\"" << w.num(-p.y()) << "\" r=\"" << w.num(dot) << "\"/>\n";
    }
  out << "</g>\n";

  out << "<g id=\"sources\" fill=\"#d62728\">\n";
  for (const auto& fig : d.pedals) {
    const auto p = d.frame.to_face(fig.source);
    out << "<circle cx=\"" << w.num(p.x()) << "\" cy=\"" << w.num(-p.y()) << "\" r=\"" << w.num(1.5 * dot) << "\"/>\n";
  }
  out << "</g>\n";

  out << "<g id=\"circles\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1\">\n";
  for (const auto& fig : d.pedals) {
    if (!fig.circle) continue;
    const auto c = d.frame.to_face(fig.circle->center);
    out << "<circle vector-effect=\"non-scaling-stroke\" cx=\"" << w.num(c.x()) << "\" cy=\"" << w.num(-c.y())
        << "\" r=\"" << w.num(fig.circle->radius) << "\"/>\n";
  }
  out << "</g>\n";

  out << "<g id=\"curve\" fill=\"none\" stroke=\"#9467bd\" stroke-width=\"1\">\n";
  if (d.curve) {
    for (const auto& line : d.curve->polylines) {
      out << "<path vector-effect=\"non-scaling-stroke\" data-branch=\"" << line.branch << "\" d=\"";
      for (size_t k = 0; k < line.points.size(); ++k) out << (k == 0 ? "M" : " L") << w.xy(line.points[k]);
      if (line.closed) out << " Z";
      out << "\"/>\n";
    }
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string render_obj(const Scene& scene, const std::optional<std::pair<std::string, std::string>>& pair,
                       const Tolerance& base, const ObjOptions& options) {
  std::ostringstream out;
  out.precision(17);
  out << "# tetrahedra: " << scene.tetrahedra.size() << "\n";
  size_t next = 1;
  for (const auto& [name, t] : scene.tetrahedra) {
    out << "o " << name << "\n";
    for (const auto& v : t.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << "\n";
    for (const auto& e : kEdges) out << "l " << next + static_cast<size_t>(e.i) << ' ' << next + static_cast<size_t>(e.j) << "\n";
    next += 4;
  }
  if (!pair) return out.str();

  const auto& a = scene.tetrahedron(pair->first);
  const auto& b = scene.tetrahedron(pair->second);
  const auto tol = base.with_scale(pair_scale(a, b));
  const auto rep = verify_sphere(a, b, tol);
  for (size_t k = 0; k < rep.points.size(); ++k) {
    const auto& p = rep.points[k];
    out << "o V" << edge_label(rep.edges[k]) << "\n";
    out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << "\n";
    out << "p " << next++ << "\n";
  }

  out << "o carrier\n";
  const int rings = std::max(options.sphere_resolution, 3);
  const int segments = 2 * rings;
  if (rep.carrier.is_sphere()) {
    const auto& s = rep.carrier.sphere();
    const double pi = std::acos(-1.0);
    const size_t top = next;
    out << "v " << s.center.x() << ' ' << s.center.y() << ' ' << s.center.z() + s.radius << "\n";
    for (int r = 1; r < rings; ++r) {
      const double theta = pi * r / rings;
      for (int k = 0; k < segments; ++k) {
        const double phi = 2.0 * pi * k / segments;
        const Point p = s.center + s.radius * Point(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                                    std::cos(theta));
        out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << "\n";
      }
    }
    const size_t bottom = top + 1 + static_cast<size_t>((rings - 1) * segments);
    out << "v " << s.center.x() << ' ' << s.center.y() << ' ' << s.center.z() - s.radius << "\n";
    const auto ring = [&](int r, int k) { return top + 1 + static_cast<size_t>((r - 1) * segments + (k % segments)); };
    for (int k = 0; k < segments; ++k) out << "f " << top << ' ' << ring(1, k) << ' ' << ring(1, k + 1) << "\n";
    for (int r = 1; r + 1 < rings; ++r)
      for (int k = 0; k < segments; ++k)
        out << "f " << ring(r, k) << ' ' << ring(r + 1, k) << ' ' << ring(r + 1, k + 1) << ' ' << ring(r, k + 1) << "\n";
    for (int k = 0; k < segments; ++k)
      out << "f " << ring(rings - 1, k + 1) << ' ' << ring(rings - 1, k) << ' ' << bottom << "\n";
  } else {
    // Square patch of the carrier plane covering the intersection points.
    const auto& pl = rep.carrier.plane();
    const Vec3 u = pl.normal.unitOrthogonal();
    const Vec3 v = pl.normal.cross(u);
    Point c = Point::Zero();
    for (const auto& p : rep.points) c += p;
    c /= static_cast<double>(rep.points.size());
    c -= pl.signed_distance(c) * pl.normal;
    double half = 0.0;
    for (const auto& p : rep.points) half = std::max(half, (p - c).norm());
    half *= 1.25;
    const std::array<Point, 4> corners{Point(c - half * u - half * v), Point(c + half * u - half * v),
                                       Point(c + half * u + half * v), Point(c - half * u + half * v)};
    for (const auto& corner : corners)
      out << "v " << corner.x() << ' ' << corner.y() << ' ' << corner.z() << "\n";
    out << "f " << next << ' ' << next + 1 << ' ' << next + 2 << ' ' << next + 3 << "\n";
  }
  return out.str();
}

}  // namespace orthosect
