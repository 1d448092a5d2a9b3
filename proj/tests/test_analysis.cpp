#include <doctest.h>

#include "orthosect/analysis.hpp"
#include "orthosect/scene.hpp"
#include "orthosect/solver.hpp"
#include "support/generators.hpp"

#include <Eigen/QR>

using namespace orthosect;

namespace {

struct DemoPair {
  Tetrahedron a;
  Tetrahedron b;
};

DemoPair demo() {
  const auto scene = load_scene("data/demo.json");
  return {scene.tetrahedron("A"), scene.tetrahedron("B")};
}

Tolerance pair_tolerance(const Tetrahedron& a, const Tetrahedron& b) {
  return Tolerance{}.with_scale(pair_scale(a, b));
}

double distance_to_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const double t = d.squaredNorm() > 0.0 ? std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0) : 0.0;
  return (p - a - t * d).norm();
}

double distance_to_trace(const CurveTrace& trace, const Eigen::Vector2d& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : trace.polylines) {
    const size_t m = line.points.size();
    if (m == 1) best = std::min(best, (p - line.points[0]).norm());
    const size_t segments = line.closed ? m : m - 1;
    for (size_t k = 0; k < segments; ++k)
      best = std::min(best, distance_to_segment(p, line.points[k], line.points[(k + 1) % m]));
  }
  return best;
}

double cell_size(const CurveTrace& trace) {
  return ((trace.window.hi - trace.window.lo) / trace.grid).maxCoeff();
}

double best_residual(const Tetrahedron& host, const Point& p, const Tolerance& tol) {
  double best = std::numeric_limits<double>::infinity();
  for (double f : chain_sphere_residual(host, p, tol)) best = std::min(best, std::abs(f));
  return best;
}

// Flat partner on the solution family of the demo pair: walk the family until
// the signed volume of B changes sign, then bisect between the two samples,
// pulling each interpolant back onto the solution set.
Tetrahedron flat_partner(const Tetrahedron& a, const Tetrahedron& b) {
  const auto branch = trace_family(a, b, 400, 2e-2, SolverConfig{}, 1);
  size_t k = 1;
  while (k < branch.samples.size() &&
         branch.samples[k - 1].signed_volume() * branch.samples[k].signed_volume() > 0.0)
    ++k;
  REQUIRE(k < branch.samples.size());
  const Coordinates x0 = to_coordinates(branch.samples[k - 1]), x1 = to_coordinates(branch.samples[k]);
  const double scale = a.diameter();
  const auto pull_back = [&](double lambda) {
    Coordinates x = (1.0 - lambda) * x0 + lambda * x1;
    for (int it = 0; it < 20; ++it) {
      const auto t = from_coordinates(x);
      const ResidualVector r = orthosect_residuals(a, t, scale);
      if (max_abs(r) < 1e-15) break;
      x -= residual_jacobian(a, t, scale).completeOrthogonalDecomposition().solve(r);
    }
    return from_coordinates(x);
  };
  const double v0 = branch.samples[k - 1].signed_volume();
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pull_back(mid).signed_volume() * v0 > 0.0 ? lo : hi) = mid;
  }
  return pull_back(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("sphere of intersection points on solver pairs") {
  const auto pairs = gen::solved_pairs(81, 4, 3);
  REQUIRE(pairs.size() >= 10);
  for (const auto& [a, b] : pairs) {
    const auto tol = pair_tolerance(a, b);
    const auto rep = verify_sphere(a, b, tol);
    CHECK(rep.points.size() == 6);
    CHECK(rep.residuals.size() == 6);
    CHECK(rep.carrier.is_sphere());
    for (double r : rep.residuals) CHECK(std::abs(r) <= 1e-8 * tol.scene_scale);
    REQUIRE(rep.midpoint_gap.has_value());
    CHECK(*rep.midpoint_gap <= 1e-8);
  }
}

TEST_CASE("flat partners give a plane of intersection points") {
  const auto [a, b] = demo();
  const auto flat = flat_partner(a, b);
  const auto tol = pair_tolerance(a, flat);
  REQUIRE(flat.is_flat(tol));
  CHECK(max_abs(orthosect_residuals(a, flat, a.diameter())) <= 1e-12);
  const auto rep = verify_sphere(a, flat, tol);
  CHECK(rep.carrier.is_plane());
  CHECK(rep.max_residual <= tol.eps_rel * tol.scene_scale);
  CHECK_FALSE(rep.midpoint_gap.has_value());
}

TEST_CASE("five intersection points of relaxed configurations") {
  gen::Rng rng(82);
  int checked = 0;
  for (int host = 0; host < 6; ++host) {
    const auto a = gen::tetrahedron(rng);
    SolverConfig cfg;
    cfg.seed = 820 + static_cast<std::uint64_t>(host);
    cfg.restarts = 16;
    cfg.relaxed_intersection = host % 6;
    for (const auto& b : solve(a, cfg).solutions) {
      const auto tol = pair_tolerance(a, b);
      if (a.is_flat(tol) || b.is_flat(tol)) continue;
      const auto rep = verify_sphere(a, b, tol, true);
      CHECK(rep.points.size() == 5);
      CHECK(rep.max_residual <= tol.eps_rel * tol.scene_scale);
      ++checked;
    }
  }
  CHECK(checked >= 5);
}

TEST_CASE("verify_sphere rejects pairs that do not orthosect") {
  const Tetrahedron t({Point(1, 1, 1), Point(1, -1, -1), Point(-1, 1, -1), Point(-1, -1, 1)});
  try {
    verify_sphere(t, t, Tolerance{}.with_scale(t.diameter()));
    FAIL("expected a precondition failure");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("conjugate partners") {
  const auto pairs = gen::solved_pairs(83, 4, 3);
  int checked = 0;
  for (const auto& [a, b] : pairs) {
    const auto tol = pair_tolerance(a, b);
    Tetrahedron c, back;
    try {
      c = conjugate(a, b, tol).partner;
      back = conjugate(a, c, tol).partner;
    } catch (const GeometryError& e) {
      CHECK(e.kind() != ErrorKind::Postcondition);
      continue;
    }
    ++checked;
    CHECK(max_abs(orthosect_residuals(a, c, a.diameter())) <= 1e-8);
    for (int i = 0; i < 4; ++i) CHECK((back[i] - b[i]).norm() <= 1e-7 * tol.scene_scale);

    const auto rb = verify_sphere(a, b, tol), rc = verify_sphere(a, c, tol);
    REQUIRE(rb.carrier.is_sphere());
    REQUIRE(rc.carrier.is_sphere());
    CHECK((rb.carrier.sphere().center - rc.carrier.sphere().center).norm() <= 1e-8 * tol.scene_scale);
    CHECK(std::abs(rb.carrier.sphere().radius - rc.carrier.sphere().radius) <= 1e-8 * tol.scene_scale);

    // Projections of corresponding vertices are isogonal conjugates on every face.
    for (int i = 0; i < 4; ++i) {
      const auto f = opposite_face(i);
      const std::array<Point, 3> face{a[f[0]], a[f[1]], a[f[2]]};
      const Point pb = project_to_plane(b[i], a.face_plane(i)), pc = project_to_plane(c[i], a.face_plane(i));
      CHECK((isogonal_conjugate(pb, face, tol) - pc).norm() <= 1e-7 * tol.scene_scale);
    }
  }
  CHECK(checked >= 8);
}

TEST_CASE("a partner over the incenter is its own conjugate on that face") {
  // Slide the apex until the incenter of the base lies on the curve.
  const std::array<Point, 3> base{Point(0, 0, 0), Point(3, 0, 0), Point(1, 2.5, 0)};
  const double la = (base[1] - base[2]).norm(), lb = (base[0] - base[2]).norm(), lc = (base[0] - base[1]).norm();
  const Point incenter = (la * base[0] + lb * base[1] + lc * base[2]) / (la + lb + lc);
  const auto host = [&](double y) { return Tetrahedron({base[0], base[1], base[2], Point(1.5, y, 2.2)}); };
  const auto tol = Tolerance{}.with_scale(host(0.8).diameter());

  std::optional<std::pair<double, double>> bracket;
  int root = 0;
  for (double y = -1.0; y < 2.0 && !bracket; y += 0.05)
    for (int r = 0; r < 2 && !bracket; ++r) {
      const auto f0 = chain_sphere_residual(host(y), incenter, tol);
      const auto f1 = chain_sphere_residual(host(y + 0.05), incenter, tol);
      if (f0.size() == 2 && f1.size() == 2 && f0[static_cast<size_t>(r)] * f1[static_cast<size_t>(r)] < 0.0) {
        bracket = std::make_pair(y, y + 0.05);
        root = r;
      }
    }
  REQUIRE(bracket.has_value());
  auto [lo, hi] = *bracket;
  const auto value = [&](double y) { return chain_sphere_residual(host(y), incenter, tol)[static_cast<size_t>(root)]; };
  const double f_lo = value(lo);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) * f_lo > 0.0 ? lo : hi) = mid;
  }
  const auto a = host(lo);
  const auto b = solve_from_curve_point(a, incenter, root, tol);
  const auto c = conjugate(a, b, pair_tolerance(a, b)).partner;
  const Point c4 = project_to_plane(c[3], a.face_plane(3));
  CHECK((c4 - incenter).norm() <= 1e-7 * tol.scene_scale);
}

TEST_CASE("curve traces") {
  const auto [a, b] = demo();
  const auto tol = pair_tolerance(a, b);
  const auto trace = trace_curve(a, 3, default_window(a, 3), 64, tol);
  REQUIRE(trace.vertex_count() > 100);
  CHECK(trace.residual_bound <= 1e-6);

  SUBCASE("every vertex lies on the curve") {
    for (const auto& line : trace.polylines)
      for (const auto& uv : line.points) CHECK(best_residual(a, trace.frame.to_world(uv), tol) <= 1e-6);
  }

  SUBCASE("the projected vertex of a solver partner is on the trace") {
    const Point b4 = project_to_plane(b[3], a.face_plane(3));
    CHECK(distance_to_trace(trace, trace.frame.to_face(b4)) <= 2.0 * cell_size(trace));
  }

  SUBCASE("the curve is closed under isogonal conjugation") {
    const std::array<Point, 3> face{a[0], a[1], a[2]};
    int checked = 0;
    for (const auto& line : trace.polylines)
      for (size_t k = 0; k < line.points.size(); k += 3) {
        Point q;
        try {
          q = isogonal_conjugate(trace.frame.to_world(line.points[k]), face, tol);
        } catch (const GeometryError&) {
          continue;
        }
        const auto fs = chain_sphere_residual(a, q, tol);
        if (fs.empty()) continue;
        ++checked;
        CHECK(best_residual(a, q, tol) <= 1e-5);
      }
    CHECK(checked >= 30);
  }

  SUBCASE("a window far from the face holds no crossings") {
    const auto far = trace_curve(a, 3, Window{{1e4, 1e4}, {1e4 + 1, 1e4 + 1}}, 16, tol);
    CHECK(far.polylines.empty());
  }

  SUBCASE("faces are traced in their own frames") {
    for (int face = 0; face < 3; ++face) {
      const auto t = trace_curve(a, face, default_window(a, face), 32, tol);
      const auto relabeled = host_for_face(a, face);
      for (const auto& line : t.polylines)
        for (const auto& uv : line.points) CHECK(best_residual(relabeled, t.frame.to_world(uv), tol) <= 1e-6);
    }
  }
}

TEST_CASE("the trace of a symmetric host is symmetric") {
  // Face (1,2,3) is isosceles about x = 0 and the apex sits over that axis.
  const Tetrahedron a({Point(-1, 0, 0), Point(1, 0, 0), Point(0, 2, 0), Point(0, 0.7, 1.5)});
  const auto tol = Tolerance{}.with_scale(a.diameter());
  const auto trace = trace_curve(a, 3, default_window(a, 3), 64, tol);
  REQUIRE(trace.vertex_count() > 50);
  const Vec3 axis_normal = Vec3::UnitX();
  for (const auto& line : trace.polylines)
    for (const auto& uv : line.points) {
      Point p = trace.frame.to_world(uv);
      p -= 2.0 * p.dot(axis_normal) * axis_normal;
      CHECK(distance_to_trace(trace, trace.frame.to_face(p)) <= cell_size(trace));
    }
}

TEST_CASE("degree statistics") {
  const auto [a, b] = demo();
  const auto tol = pair_tolerance(a, b);
  const auto coarse = trace_curve(a, 3, default_window(a, 3), 64, tol);
  const auto fine = trace_curve(a, 3, default_window(a, 3), 128, tol);

  const Eigen::Vector2d outside = coarse.window.lo - Eigen::Vector2d(1.0, 1.0);
  CHECK(count_line_hits(coarse, outside, {1.0, -1.0}).count == 0);

  const auto e1 = estimate_degree(coarse, 40, 5), e2 = estimate_degree(fine, 40, 5);
  REQUIRE(e1.lines.size() == 40);
  REQUIRE(e2.lines.size() == 40);
  for (size_t k = 0; k < e1.lines.size(); ++k)
    CHECK(std::abs(e1.lines[k].count - e2.lines[k].count) <= e1.lines[k].flagged + e2.lines[k].flagged);

  const auto again = estimate_degree(coarse, 40, 5);
  CHECK(again.histogram == e1.histogram);
}

TEST_CASE("conjugate sequences") {
  const auto [a, b] = demo();
  const auto tol = pair_tolerance(a, b);

  SUBCASE("two steps give the conjugate pair") {
    const auto run = iterate_sequence(a, b, 2, tol);
    REQUIRE(run.terms.size() == 3);
    const auto c = conjugate(b, a, tol).partner;
    for (int i = 0; i < 4; ++i) CHECK(run.terms[2][i] == c[i]);
  }

  SUBCASE("six steps share one sphere and two orthology centers") {
    const auto run = iterate_sequence(a, b, 6, tol, 1e-6);
    CHECK_FALSE(run.failed_step.has_value());
    CHECK(run.terms.size() == 7);
    CHECK(run.pair_reports.size() == 6);
    CHECK(run.shared_residual <= 1e-6 * tol.scene_scale);
    CHECK(run.distinct_centers.size() == 2);
  }
}
