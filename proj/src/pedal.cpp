#include "orthosect/pedal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace orthosect {

namespace {

constexpr double kSimsonBand = 1e-7;

Plane checked_face_plane(const std::array<Point, 3>& face, const Tolerance& tol) {
  const Vec3 w = (face[1] - face[0]).cross(face[2] - face[0]);
  const double longest =
      std::max({(face[1] - face[0]).norm(), (face[2] - face[0]).norm(), (face[2] - face[1]).norm()});
  if (!(longest > 0.0) || w.norm() / longest <= tol.eps_rel * tol.scene_scale)
    throw GeometryError(ErrorKind::Degenerate, "degenerate (collinear) host face");
  return Plane::from_normal(w, face[0]);
}

constexpr std::array<std::array<int, 2>, 3> kFaceEdges{{{0, 1}, {0, 2}, {1, 2}}};

Line face_edge_line(const std::array<Point, 3>& face, int k) {
  const auto& [a, b] = kFaceEdges[static_cast<size_t>(k)];
  return Line::through(face[static_cast<size_t>(a)], face[static_cast<size_t>(b)]);
}

// Intersection of two coplanar lines.
Point meet_in_plane(const Line& l1, const Line& l2, const Tolerance& tol, const char* what) {
  const auto cp = closest_points(l1, l2, tol);
  if (cp.parallel) {
    std::ostringstream msg;
    msg << "chain completion: parallel perpendiculars while locating " << what;
    throw GeometryError(ErrorKind::Degenerate, msg.str());
  }
  return 0.5 * (cp.p1 + cp.p2);
}

Line in_plane_perpendicular(const Plane& plane, const Line& edge, const Point& foot) {
  return Line::from_direction(foot, plane.normal.cross(edge.direction));
}

// Co-sphericity determinant of five points: det of rows [|p|^2, x, y, z, 1].
double cosphere_det(const std::array<Point, 5>& pts) {
  Eigen::Matrix<double, 5, 5> m;
  for (int r = 0; r < 5; ++r) {
    const auto& p = pts[static_cast<size_t>(r)];
    m.row(r) << p.squaredNorm(), p.x(), p.y(), p.z(), 1.0;
  }
  return m.partialPivLu().determinant();
}

std::array<Point, 5> five_feet(const PedalChain& chain) {
  // Every foot except the one on edge 34 (index 5).
  return {chain.feet[0], chain.feet[1], chain.feet[2], chain.feet[3], chain.feet[4]};
}

// Real roots of sum c[k] x^k.
std::vector<double> real_roots(Eigen::VectorXd c) {
  const double cmax = c.cwiseAbs().maxCoeff();
  if (!(cmax > 0.0)) return {};
  c /= cmax;
  int degree = static_cast<int>(c.size()) - 1;
  while (degree > 0 && std::abs(c(degree)) <= 1e-10) --degree;
  if (degree == 0) return {};
  if (degree == 1) return {-c(0) / c(1)};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int k = 0; k < degree; ++k) companion(0, k) = -c(degree - 1 - k) / c(degree);
  for (int k = 1; k < degree; ++k) companion(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  std::vector<double> roots;
  for (int k = 0; k < degree; ++k) {
    const auto z = eig.eigenvalues()(k);
    if (std::abs(z.imag()) <= 1e-6 * std::max(1.0, std::abs(z.real()))) roots.push_back(z.real());
  }
  return roots;
}

}  // namespace

PedalTriangle pedal_triangle(const Point& source, const std::array<Point, 3>& face,
                             const Tolerance& tol, bool strict) {
  const Plane plane = checked_face_plane(face, tol);
  const double off = std::abs(plane.signed_distance(source));
  if (strict && off > tol.eps_abs * tol.scene_scale) {
    std::ostringstream msg;
    msg << "pedal source lies " << off << " off the face plane";
    throw GeometryError(ErrorKind::Precondition, msg.str());
  }
  PedalTriangle tri{project_to_plane(source, plane), face, {}};
  for (int k = 0; k < 3; ++k)
    tri.feet[static_cast<size_t>(k)] = foot_on_line(tri.source, face_edge_line(face, k));
  return tri;
}

Circle3D circumcircle(const std::array<Point, 3>& face, const Tolerance& tol) {
  checked_face_plane(face, tol);
  return circle_through(face[0], face[1], face[2], tol);
}

Circle3D pedal_circle(const Point& source, const std::array<Point, 3>& face, const Tolerance& tol) {
  const Circle3D cc = circumcircle(face, tol);
  const Point p = project_to_plane(source, cc.carrier);
  const double off = std::abs((p - cc.center).norm() - cc.radius);
  if (off <= kSimsonBand * tol.scene_scale)
    throw GeometryError(ErrorKind::SimsonDegenerate,
                        "pedal source on the circumcircle: feet lie on a Simson line");
  const auto tri = pedal_triangle(p, face, tol);
  Circle3D c;
  try {
    c = circle_through(tri.feet[0], tri.feet[1], tri.feet[2], tol);
  } catch (const GeometryError&) {
    throw GeometryError(ErrorKind::SimsonDegenerate, "pedal feet are collinear");
  }
  c.carrier = cc.carrier;
  return c;
}

Point isogonal_conjugate(const Point& source, const std::array<Point, 3>& face, const Tolerance& tol) {
  const Circle3D c = pedal_circle(source, face, tol);
  return 2.0 * c.center - project_to_plane(source, c.carrier);
}

SourceRecovery recover_source(const std::array<Point, 3>& feet, const std::array<Point, 3>& face,
                              const Tolerance& tol) {
  const Plane plane = checked_face_plane(face, tol);
  std::array<Line, 3> perps;
  for (int k = 0; k < 3; ++k)
    perps[static_cast<size_t>(k)] =
        in_plane_perpendicular(plane, face_edge_line(face, k), feet[static_cast<size_t>(k)]);
  try {
    const auto c = concurrency_point(perps, tol);
    return {c.point, c.spread};
  } catch (const GeometryError&) {
    throw GeometryError(ErrorKind::Degenerate, "recover_source: perpendiculars are parallel");
  }
}

std::array<Point, 3> PedalChain::face(int i) const {
  const auto f = opposite_face(i);
  return {host[f[0]], host[f[1]], host[f[2]]};
}

PedalTriangle PedalChain::triangle(int i) const {
  const auto f = opposite_face(i);
  return PedalTriangle{sources[static_cast<size_t>(i)],
                       face(i),
                       {feet[static_cast<size_t>(edge_index(f[0], f[1]))],
                        feet[static_cast<size_t>(edge_index(f[0], f[2]))],
                        feet[static_cast<size_t>(edge_index(f[1], f[2]))]}};
}

Vec3 chain_direction(const Tetrahedron& host) {
  const Vec3 d = (host[1] - host[0]).normalized();
  Vec3 u = host[3] - host[0];
  u -= u.dot(d) * d;
  const double n = u.norm();
  if (!(n > 0.0)) throw GeometryError(ErrorKind::Degenerate, "host face (1,2,4) is degenerate");
  return u / n;
}

PedalChain complete_chain(const Tetrahedron& host, const Point& b4, double t, const Tolerance& tol) {
  PedalChain chain;
  chain.host = host;
  auto line = [&](int e) { return host.edge_line(e); };
  const int e12 = 0, e13 = 1, e14 = 2, e23 = 3, e24 = 4, e34 = 5;

  // Source on face (1,2,3) and its pedal triangle.
  const auto face4 = chain.face(3);
  pedal_circle(b4, face4, tol);  // rejects Simson-degenerate sources
  const auto tri4 = pedal_triangle(b4, face4, tol);
  chain.sources[3] = tri4.source;
  chain.feet[e12] = tri4.feet[0];
  chain.feet[e13] = tri4.feet[1];
  chain.feet[e23] = tri4.feet[2];

  // Source on face (1,2,4), on the perpendicular to edge 12 through V12.
  chain.sources[2] = chain.feet[e12] + t * chain_direction(host);
  chain.feet[e14] = foot_on_line(chain.sources[2], line(e14));
  chain.feet[e24] = foot_on_line(chain.sources[2], line(e24));

  // Source on face (1,3,4) from the feet on edges 13 and 14.
  const Plane plane2 = host.face_plane(1);
  chain.sources[1] = meet_in_plane(in_plane_perpendicular(plane2, line(e13), chain.feet[e13]),
                                   in_plane_perpendicular(plane2, line(e14), chain.feet[e14]), tol,
                                   "the source on face 134");
  chain.feet[e34] = foot_on_line(chain.sources[1], line(e34));

  // Source on face (2,3,4) from the feet on edges 23 and 24; its foot on 34
  // must agree with the one above.
  const Plane plane1 = host.face_plane(0);
  chain.sources[0] = meet_in_plane(in_plane_perpendicular(plane1, line(e23), chain.feet[e23]),
                                   in_plane_perpendicular(plane1, line(e24), chain.feet[e24]), tol,
                                   "the source on face 234");
  chain.closure_spread = (foot_on_line(chain.sources[0], line(e34)) - chain.feet[e34]).norm();
  return chain;
}

PedalChain chain_from_sources(const Tetrahedron& host, const std::array<Point, 4>& sources,
                              const Tolerance& tol) {
  PedalChain chain;
  chain.host = host;
  std::array<Point, 6> sum;
  sum.fill(Point::Zero());
  std::array<std::vector<Point>, 6> seen;
  for (int i = 0; i < 4; ++i) {
    const auto tri = pedal_triangle(sources[static_cast<size_t>(i)], chain.face(i), tol);
    chain.sources[static_cast<size_t>(i)] = tri.source;
    const auto f = opposite_face(i);
    const std::array<int, 3> edges{edge_index(f[0], f[1]), edge_index(f[0], f[2]), edge_index(f[1], f[2])};
    for (int k = 0; k < 3; ++k) seen[static_cast<size_t>(edges[static_cast<size_t>(k)])].push_back(tri.feet[static_cast<size_t>(k)]);
  }
  for (int e = 0; e < 6; ++e) {
    const auto& two = seen[static_cast<size_t>(e)];
    chain.feet[static_cast<size_t>(e)] = 0.5 * (two[0] + two[1]);
    chain.closure_spread = std::max(chain.closure_spread, (two[0] - two[1]).norm());
  }
  return chain;
}

PedalChain extract_chain(const Tetrahedron& host, const Tetrahedron& partner, const Tolerance& tol) {
  PedalChain chain;
  chain.host = host;
  for (int e = 0; e < 6; ++e) {
    const auto cp = closest_points(host.edge_line(e), partner.edge_line(complement(e)), tol);
    chain.feet[static_cast<size_t>(e)] = 0.5 * (cp.p1 + cp.p2);
  }
  for (int i = 0; i < 4; ++i)
    chain.sources[static_cast<size_t>(i)] = project_to_plane(partner[i], host.face_plane(i));
  for (int i = 0; i < 4; ++i) {
    const auto tri = chain.triangle(i);
    const auto f = opposite_face(i);
    for (int k = 0; k < 3; ++k) {
      const auto& [a, b] = kFaceEdges[static_cast<size_t>(k)];
      const Line l = Line::through(host[f[static_cast<size_t>(a)]], host[f[static_cast<size_t>(b)]]);
      chain.closure_spread =
          std::max(chain.closure_spread, (foot_on_line(tri.source, l) - tri.feet[static_cast<size_t>(k)]).norm());
    }
  }
  return chain;
}

std::vector<double> spherical_parameters(const Tetrahedron& host, const Point& b4, const Tolerance& tol) {
  const Point origin = host.centroid();
  const double unit = host.diameter();
  // The determinant is a polynomial of degree <= 4 in t (two feet move
  // affinely). Evaluate it exactly in normalized coordinates.
  auto det_at = [&](double tau) {
    const auto chain = complete_chain(host, b4, tau * unit, tol);
    auto pts = five_feet(chain);
    for (auto& p : pts) p = (p - origin) / unit;
    return cosphere_det(pts);
  };

  constexpr int kSamples = 9;
  Eigen::Matrix<double, kSamples, 5> vander;
  Eigen::Matrix<double, kSamples, 1> values;
  for (int k = 0; k < kSamples; ++k) {
    const double tau = -2.0 + 0.5 * k;
    double pw = 1.0;
    for (int d = 0; d < 5; ++d, pw *= tau) vander(k, d) = pw;
    values(k) = det_at(tau);
  }
  const Eigen::VectorXd coeffs = vander.colPivHouseholderQr().solve(values);

  std::vector<double> out;
  for (double tau : real_roots(coeffs)) {
    if (!std::isfinite(tau) || std::abs(tau) > 1e3) continue;
    // Newton polish on the exact determinant.
    for (int it = 0; it < 4; ++it) {
      const double h = 1e-6 * std::max(1.0, std::abs(tau));
      const double f0 = det_at(tau);
      const double slope = (det_at(tau + h) - det_at(tau - h)) / (2.0 * h);
      if (!(std::abs(slope) > 0.0)) break;
      const double next = tau - f0 / slope;
      if (!(std::abs(det_at(next)) < std::abs(f0))) break;
      tau = next;
    }
    const double t = tau * unit;
    try {
      const auto chain = complete_chain(host, b4, t, tol);
      const auto pts = five_feet(chain);
      const auto fit = fit_carrier(pts, tol);
      if (fit.max_residual > tol.eps_rel * tol.scene_scale) continue;
    } catch (const GeometryError&) {
      continue;
    }
    if (std::none_of(out.begin(), out.end(),
                     [&](double s) { return std::abs(s - t) <= 1e-9 * unit; }))
      out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double chain_sphere_residual_at(const Tetrahedron& host, const Point& b4, double t, const Tolerance& tol) {
  const auto chain = complete_chain(host, b4, t, tol);
  const auto pts = five_feet(chain);
  const auto fit = fit_carrier(pts, tol);
  return fit.carrier.signed_residual(chain.feet[5]) / tol.scene_scale;
}

std::vector<double> chain_sphere_residual(const Tetrahedron& host, const Point& b4, const Tolerance& tol) {
  std::vector<double> out;
  for (double t : spherical_parameters(host, b4, tol))
    out.push_back(chain_sphere_residual_at(host, b4, t, tol));
  return out;
}

SphericalChain make_spherical(const PedalChain& chain, const Tolerance& tol) {
  const auto fit = fit_carrier(chain.feet, tol);
  if (fit.max_residual > tol.eps_rel * tol.scene_scale) {
    std::ostringstream msg;
    msg << "pedal chain is not spherical: max residual " << fit.max_residual;
    throw GeometryError(ErrorKind::Precondition, msg.str());
  }
  return SphericalChain{chain, fit.carrier, fit.max_residual};
}

Tetrahedron reconstruct_tetrahedron(const SphericalChain& sc, const Tolerance& tol) {
  const auto& chain = sc.chain;
  const auto& host = chain.host;
  if (sc.carrier.is_plane())
    throw GeometryError(ErrorKind::Degenerate,
                        "feet are coplanar: every partner face would lie in the carrier plane");

  std::array<Plane, 4> faces;
  for (int i = 0; i < 4; ++i) {
    std::array<Point, 3> tri;
    int n = 0;
    for (int e = 0; e < 6; ++e)
      if (kEdges[e].i == i || kEdges[e].j == i) tri[static_cast<size_t>(n++)] = chain.feet[static_cast<size_t>(e)];
    try {
      faces[static_cast<size_t>(i)] = checked_face_plane(tri, tol);
    } catch (const GeometryError&) {
      throw GeometryError(ErrorKind::Degenerate, "collinear feet on the edges through A" +
                                                     std::to_string(i + 1) + ": degenerate partner");
    }
  }
  std::array<Point, 4> vertices;
  for (int m = 0; m < 4; ++m) {
    const auto f = opposite_face(m);
    try {
      vertices[static_cast<size_t>(m)] = meet_planes(faces[static_cast<size_t>(f[0])], faces[static_cast<size_t>(f[1])],
                                                     faces[static_cast<size_t>(f[2])], tol);
    } catch (const GeometryError& e) {
      throw GeometryError(ErrorKind::Conditioning, std::string("reconstruct: ") + e.what());
    }
  }
  Tetrahedron b(vertices);

  const auto orth = edge_orthogonality_residuals(host, b);
  double worst = 0.0;
  std::ostringstream detail;
  for (int e = 0; e < 6; ++e) {
    const auto cp = closest_points(host.edge_line(e), b.edge_line(complement(e)), tol);
    const double gap = cp.gap / tol.scene_scale;
    const double drift = (0.5 * (cp.p1 + cp.p2) - chain.feet[static_cast<size_t>(e)]).norm() / tol.scene_scale;
    const double r = std::max({orth[static_cast<size_t>(e)], gap, drift});
    worst = std::max(worst, r);
    detail << ' ' << edge_label(e) << ":orth=" << orth[static_cast<size_t>(e)] << ",gap=" << gap << ",drift=" << drift;
  }
  if (worst > tol.eps_rel)
    throw GeometryError(ErrorKind::Postcondition, "reconstructed tetrahedron does not orthosect:" + detail.str());
  return b;
}

double concyclicity_residual(const std::array<Point, 4>& quad, const Tolerance& tol) {
  int skip = 3;
  double best = -1.0;
  for (int s = 0; s < 4; ++s) {
    std::array<Point, 3> tri;
    int n = 0;
    for (int k = 0; k < 4; ++k)
      if (k != s) tri[static_cast<size_t>(n++)] = quad[static_cast<size_t>(k)];
    const double longest =
        std::max({(tri[1] - tri[0]).norm(), (tri[2] - tri[0]).norm(), (tri[2] - tri[1]).norm()});
    if (!(longest > 0.0)) continue;
    const double height = (tri[1] - tri[0]).cross(tri[2] - tri[0]).norm() / longest;
    if (height > best) {
      best = height;
      skip = s;
    }
  }
  std::array<Point, 3> tri;
  int n = 0;
  for (int k = 0; k < 4; ++k)
    if (k != skip) tri[static_cast<size_t>(n++)] = quad[static_cast<size_t>(k)];
  const Circle3D c = circle_through(tri[0], tri[1], tri[2], tol);
  return distance_to_circle(quad[static_cast<size_t>(skip)], c);
}

CircularNet circular_net(const PedalChain& chain, int edge, const Tolerance& tol) {
  const auto& e = kEdges.at(static_cast<size_t>(edge));
  const int i = e.i, j = e.j;
  const auto rest = [&] {
    std::array<int, 2> r{};
    int n = 0;
    for (int v = 0; v < 4; ++v)
      if (v != i && v != j) r[static_cast<size_t>(n++)] = v;
    return r;
  }();
  const int k = rest[0], l = rest[1];
  auto foot = [&](int a, int b) { return chain.feet[static_cast<size_t>(edge_index(a, b))]; };

  CircularNet net;
  net.grid[0] = {foot(i, k), chain.host[i], foot(i, l)};
  net.grid[1] = {chain.sources[static_cast<size_t>(l)], foot(i, j), chain.sources[static_cast<size_t>(k)]};
  net.grid[2] = {foot(j, k), chain.host[j], foot(j, l)};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      net.residuals[static_cast<size_t>(2 * r + c)] = concyclicity_residual(
          {net.grid[r][c], net.grid[r][c + 1], net.grid[r + 1][c + 1], net.grid[r + 1][c]}, tol);
  return net;
}

}  // namespace orthosect
