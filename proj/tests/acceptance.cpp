// Acceptance run: one line per criterion, exit status 0 iff every gated
// criterion passes. Tolerances and time limits are fixed below.

#include "orthosect/analysis.hpp"
#include "orthosect/cli.hpp"
#include "orthosect/solver.hpp"
#include "support/generators.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>

using namespace orthosect;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit;  // seconds
  bool gating;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Tolerance pair_tolerance(const Tetrahedron& a, const Tetrahedron& b) {
  return Tolerance{}.with_scale(pair_scale(a, b));
}

double max_of(const std::array<double, 6>& r) { return *std::max_element(r.begin(), r.end()); }

// Worst ratio value/limit seen, and the number of checks.
struct Worst {
  double ratio = 0.0;
  int count = 0;
  int failures = 0;

  void add(double value, double limit) {
    ++count;
    ratio = std::max(ratio, value / limit);
    if (!(value <= limit)) ++failures;
  }
};

Outcome orthology_equivalence() {
  gen::Rng rng(1001);
  Worst orth, spread;
  int built = 0;
  while (built < 200) {
    const auto a = gen::tetrahedron(rng);
    const Point center = rng.point(0.8);
    bool near_vertex = false;
    for (const auto& v : a.vertices()) near_vertex = near_vertex || (v - center).norm() < 0.1;
    if (near_vertex) continue;
    std::array<double, 4> offsets;
    for (auto& d : offsets) d = rng.uniform();
    Tetrahedron b;
    try {
      b = construct_orthologic(a, center, offsets, Tolerance{});
    } catch (const GeometryError&) {
      continue;
    }
    const auto tol = pair_tolerance(a, b);
    if (a.is_flat(tol) || b.is_flat(tol)) continue;
    ++built;
    orth.add(max_of(edge_orthogonality_residuals(a, b)), 1e-10);
    try {
      const auto rep = orthology_centers(a, b, tol);
      spread.add(std::max(rep.spread_a, rep.spread_b), 1e-9);
    } catch (const GeometryError&) {
      spread.add(1.0, 1e-9);
    }
  }
  return {orth.failures == 0 && spread.failures == 0,
          std::to_string(built) + " partners, worst orthogonality/limit " + fmt("%.2e", orth.ratio) +
              ", worst spread/limit " + fmt("%.2e", spread.ratio)};
}

// Five orthogonality conditions imposed linearly (B1 random, four random
// linear side conditions); the A12/B34 condition is left out.
Tetrahedron five_constraint_partner(const Tetrahedron& a, gen::Rng& rng) {
  const Point b1 = rng.point();
  Eigen::Matrix<double, 9, 9> m = Eigen::Matrix<double, 9, 9>::Zero();
  Eigen::Matrix<double, 9, 1> rhs = Eigen::Matrix<double, 9, 1>::Zero();
  int row = 0;
  for (int e = 1; e < 6; ++e, ++row) {
    const Vec3 da = a[kEdges[static_cast<size_t>(e)].i] - a[kEdges[static_cast<size_t>(e)].j];
    const auto be = kEdges[static_cast<size_t>(complement(e))];
    for (const auto& [v, sign] : {std::pair{be.i, 1.0}, std::pair{be.j, -1.0}}) {
      if (v == 0)
        rhs(row) -= sign * da.dot(b1);
      else
        m.block<1, 3>(row, 3 * (v - 1)) += sign * da.transpose();
    }
  }
  for (; row < 9; ++row) {
    for (int c = 0; c < 9; ++c) m(row, c) = rng.uniform();
    rhs(row) = rng.uniform();
  }
  const Eigen::Matrix<double, 9, 1> x = m.fullPivLu().solve(rhs);
  return Tetrahedron({b1, Point(x.segment<3>(0)), Point(x.segment<3>(3)), Point(x.segment<3>(6))});
}

Outcome sixth_orthogonality() {
  gen::Rng rng(1002);
  Worst sixth;
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = gen::tetrahedron(rng);
    sixth.add(edge_orthogonality_residuals(a, five_constraint_partner(a, rng))[0], 1e-10);
  }
  return {sixth.failures == 0, std::to_string(sixth.count) + " solves, worst sixth residual/limit " +
                                   fmt("%.2e", sixth.ratio)};
}

const std::vector<gen::SolvedPair>& solver_pairs() {
  static const auto pairs = gen::solved_pairs(1003, 10, 3);
  return pairs;
}

Outcome intersection_sphere() {
  const auto& pairs = solver_pairs();
  Worst residual, gap;
  for (const auto& [a, b] : pairs) {
    const auto tol = pair_tolerance(a, b);
    try {
      const auto rep = verify_sphere(a, b, tol);
      residual.add(rep.max_residual / tol.scene_scale, 1e-7);
      gap.add(rep.midpoint_gap.value_or(1.0), 1e-7);
    } catch (const GeometryError&) {
      residual.add(1.0, 1e-7);
    }
  }
  return {pairs.size() >= 20 && residual.failures == 0 && gap.failures == 0,
          std::to_string(pairs.size()) + " pairs, worst residual/limit " + fmt("%.2e", residual.ratio) +
              ", worst midpoint gap/limit " + fmt("%.2e", gap.ratio)};
}

Outcome five_point_sphere() {
  gen::Rng rng(1004);
  Worst residual;
  int genuine = 0;
  for (int host = 0; host < 12; ++host) {
    const auto a = gen::tetrahedron(rng);
    SolverConfig cfg;
    cfg.seed = 1004 + static_cast<std::uint64_t>(host);
    cfg.restarts = 16;
    cfg.relaxed_intersection = host % 6;
    for (const auto& b : solve(a, cfg).solutions) {
      const auto tol = pair_tolerance(a, b);
      if (a.is_flat(tol) || b.is_flat(tol)) continue;
      const auto r = orthosect_residuals(a, b, a.diameter());
      if (std::abs(r[6 + host % 6]) > 1e-6) ++genuine;
      try {
        residual.add(verify_sphere(a, b, tol, true).max_residual / tol.scene_scale, 1e-7);
      } catch (const GeometryError&) {
        residual.add(1.0, 1e-7);
      }
    }
  }
  return {genuine >= 5 && residual.failures == 0,
          std::to_string(residual.count) + " configurations (" + std::to_string(genuine) +
              " with the sixth pair apart), worst residual/limit " + fmt("%.2e", residual.ratio)};
}

Outcome chain_closure() {
  gen::Rng rng(1005);
  Worst closure;
  while (closure.count < 1000) {
    const auto a = gen::tetrahedron(rng);
    const auto tol = Tolerance{}.with_scale(a.diameter());
    const Point b4 = gen::in_plane(rng, {a[0], a[1], a[2]}, 0.6);
    const double t = rng.uniform(-0.8, 0.8) * a.diameter();
    try {
      closure.add(complete_chain(a, b4, t, tol).closure_spread / tol.scene_scale, 1e-9);
    } catch (const GeometryError&) {
    }
  }
  return {closure.failures == 0,
          std::to_string(closure.count) + " chains, worst closure/limit " + fmt("%.2e", closure.ratio)};
}

Outcome reconstruction() {
  const auto& pairs = solver_pairs();
  Worst vertex, net;
  for (const auto& [a, b] : pairs) {
    const auto tol = pair_tolerance(a, b);
    try {
      const auto chain = extract_chain(a, b, tol);
      const auto rebuilt = reconstruct_tetrahedron(make_spherical(chain, tol), tol);
      double err = 0.0;
      for (int i = 0; i < 4; ++i) err = std::max(err, (rebuilt[i] - b[i]).norm());
      vertex.add(err / tol.scene_scale, 1e-8);
      for (int e = 0; e < 6; ++e)
        for (double r : circular_net(chain, e, tol).residuals) net.add(r / tol.scene_scale, 1e-9);
    } catch (const GeometryError&) {
      vertex.add(1.0, 1e-8);
    }
  }
  return {vertex.failures == 0 && net.failures == 0 && net.count == 24 * static_cast<int>(pairs.size()),
          std::to_string(vertex.count) + " pairs, worst vertex error/limit " + fmt("%.2e", vertex.ratio) + ", " +
              std::to_string(net.count) + " quads, worst net residual/limit " + fmt("%.2e", net.ratio)};
}

Outcome pedal_circle_conjugates() {
  gen::Rng rng(1006);
  Worst circle, involution;
  int simson = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto tri = gen::triangle(rng);
    const Point p = gen::in_plane(rng, tri);
    const double scale = std::max({(tri[0] - tri[1]).norm(), (tri[0] - tri[2]).norm(), (tri[1] - tri[2]).norm()});
    const auto tol = Tolerance{}.with_scale(scale);
    try {
      const Point q = isogonal_conjugate(p, tri, tol);
      const auto c1 = pedal_circle(p, tri, tol), c2 = pedal_circle(q, tri, tol);
      circle.add(std::max((c1.center - c2.center).norm(), std::abs(c1.radius - c2.radius)) / scale, 1e-10);
      involution.add((isogonal_conjugate(q, tri, tol) - p).norm() / scale, 1e-10);
    } catch (const GeometryError& e) {
      if (e.kind() != ErrorKind::SimsonDegenerate) circle.add(1.0, 1e-10);
      ++simson;
    }
  }
  return {circle.failures == 0 && involution.failures == 0 && circle.count >= 450,
          std::to_string(circle.count) + " points (" + std::to_string(simson) +
              " on circumcircles), worst circle gap/limit " + fmt("%.2e", circle.ratio) +
              ", worst involution/limit " + fmt("%.2e", involution.ratio)};
}

Outcome conjugate_pairs() {
  const auto& pairs = solver_pairs();
  Worst round_trip, carrier;
  int skipped = 0;
  for (const auto& [a, b] : pairs) {
    const auto tol = pair_tolerance(a, b);
    try {
      const auto c = conjugate(a, b, tol).partner;
      const auto back = conjugate(a, c, tol).partner;
      double err = 0.0;
      for (int i = 0; i < 4; ++i) err = std::max(err, (back[i] - b[i]).norm());
      round_trip.add(err / tol.scene_scale, 1e-7);
      const auto sb = verify_sphere(a, b, tol).carrier, sc = verify_sphere(a, c, tol).carrier;
      if (!sb.is_sphere() || !sc.is_sphere()) {
        carrier.add(1.0, 1e-8);
        continue;
      }
      carrier.add(std::max((sb.sphere().center - sc.sphere().center).norm(),
                           std::abs(sb.sphere().radius - sc.sphere().radius)) /
                      tol.scene_scale,
                  1e-8);
    } catch (const GeometryError&) {
      ++skipped;
    }
  }
  return {round_trip.count >= 10 && round_trip.failures == 0 && carrier.failures == 0,
          std::to_string(round_trip.count) + " pairs (" + std::to_string(skipped) +
              " Simson-degenerate), worst round trip/limit " + fmt("%.2e", round_trip.ratio) +
              ", worst carrier gap/limit " + fmt("%.2e", carrier.ratio)};
}

Outcome self_conjugate_curve() {
  gen::Rng rng(1007);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const auto a = gen::tetrahedron(rng);
    const auto tol = Tolerance{}.with_scale(a.diameter());
    const auto trace = trace_curve(a, 3, default_window(a, 3), 128, tol);
    const size_t total = trace.vertex_count();
    if (total < 100) continue;

    std::vector<std::pair<int, Eigen::Vector2d>> vertices;
    for (const auto& line : trace.polylines)
      for (const auto& uv : line.points) vertices.emplace_back(line.branch, uv);
    const std::array<Point, 3> face{a[0], a[1], a[2]};
    Worst conj, partner;
    for (int k = 0; k < 100; ++k) {
      const auto& [branch, uv] = vertices[static_cast<size_t>(k) * total / 100];
      const Point p = trace.frame.to_world(uv);
      try {
        const auto fs = chain_sphere_residual(a, isogonal_conjugate(p, face, tol), tol);
        double best = 1.0;
        for (double f : fs) best = std::min(best, std::abs(f));
        conj.add(best, 1e-5);
      } catch (const GeometryError&) {
        conj.add(1.0, 1e-5);
      }
      try {
        const auto b = solve_from_curve_point(a, p, branch, tol);
        partner.add(max_abs(orthosect_residuals(a, b, a.diameter())), 1e-6);
      } catch (const GeometryError&) {
        partner.add(1.0, 1e-6);
      }
    }
    return {conj.failures == 0 && partner.failures == 0,
            std::to_string(total) + " traced vertices, 100 sampled, worst conjugate residual/limit " +
                fmt("%.2e", conj.ratio) + ", worst partner residual/limit " + fmt("%.2e", partner.ratio) + ", " +
                std::to_string(conj.failures + partner.failures) + " failures"};
  }
  return {false, "no host with 100 traced vertices"};
}

Outcome family_continuation() {
  const auto& [a, b] = solver_pairs().front();
  const auto branch = trace_family(a, b, 50, 1e-2, SolverConfig{}, 1);
  Worst residual;
  int off_nullity = 0;
  for (size_t k = 0; k < branch.samples.size(); ++k) {
    residual.add(branch.max_residuals[k], 1e-9);
    if (branch.nullities[k] != 1) ++off_nullity;
  }
  return {branch.samples.size() == 51 && residual.failures == 0 && off_nullity == 0,
          std::to_string(branch.samples.size() - 1) + " steps" +
              (branch.stop_reason.empty() ? "" : " (stopped: " + branch.stop_reason + ")") +
              ", worst residual/limit " + fmt("%.2e", residual.ratio) + ", samples with nullity != 1: " +
              std::to_string(off_nullity)};
}

Outcome sequence_hypotheses() {
  const auto& pairs = solver_pairs();
  // First pair whose run is not cut short by a degenerate step.
  for (const auto& [a, b] : pairs) {
    const auto tol = pair_tolerance(a, b);
    const auto run = iterate_sequence(a, b, 6, tol, 1e-6);
    if (run.failed_step) continue;
    const double shared = run.shared_residual / tol.scene_scale;
    const int distinct = static_cast<int>(run.distinct_centers.size());
    return {shared <= 1e-6 && distinct == 2,
            std::to_string(run.terms.size()) + " tetrahedra, shared sphere residual " + fmt("%.2e", shared) +
                " (limit 1e-6), distinct orthology centers " + std::to_string(distinct)};
  }
  return {false, "every run truncated by a degenerate step"};
}

Outcome degree_observation() {
  const auto& [a, b] = solver_pairs().front();
  const auto tol = Tolerance{}.with_scale(a.diameter());
  const auto trace = trace_curve(a, 3, default_window(a, 3), 128, tol);
  const auto est = estimate_degree(trace, 200, 1012);
  std::ostringstream hist;
  for (const auto& [count, lines] : est.histogram) hist << " " << count << ":" << lines;
  return {!est.lines.empty(), "max count " + std::to_string(est.max_count) + ", nine observed " +
                                  (est.nine_observed ? "yes" : "no") + ", nine exceeded " +
                                  (est.nine_exceeded ? "yes" : "no") + ", histogram" + hist.str() +
                                  " (recorded, not gated)"};
}

std::string capture(const std::string& command) {
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
  if (!pipe) return {};
  std::string out;
  char buf[4096];
  for (size_t n; (n = fread(buf, 1, sizeof buf, pipe.get())) > 0;) out.append(buf, n);
  return out;
}

Outcome determinism() {
  const std::string cli = ORTHOSECT_CLI;
  const std::string scene = std::string(ORTHOSECT_SOURCE_DIR) + "/data/demo.json";
  const std::vector<std::string> commands{
      cli + " solve --scene " + scene + " --tet A --seed 7 --restarts 32",
      cli + " solve --scene " + scene + " --tet T_reg --seed 3 --restarts 16",
      cli + " curve --scene " + scene + " --tet A --face 4 --grid 64 --seed 11 --degree-trials 50",
  };
  int identical = 0;
  for (const auto& c : commands) {
    const auto first = capture(c + " 2>/dev/null"), second = capture(c + " 2>/dev/null");
    if (!first.empty() && first == second) ++identical;
  }
  // The same in-process.
  CommandArgs args;
  args.scene = scene;
  args.tet = "A";
  args.seed = 7;
  args.restarts = 16;
  const bool in_process = run("solve", args).report.dump() == run("solve", args).report.dump();
  return {identical == static_cast<int>(commands.size()) && in_process,
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " seeded commands byte-identical across two processes, in-process solve " +
              (in_process ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"orthology-equivalence", 5, true, orthology_equivalence},
      {"sixth-orthogonality", 5, true, sixth_orthogonality},
      {"intersection-sphere", 120, true, intersection_sphere},
      {"five-point-sphere", 60, true, five_point_sphere},
      {"chain-closure", 10, true, chain_closure},
      {"reconstruction", 30, true, reconstruction},
      {"pedal-circle-conjugates", 5, true, pedal_circle_conjugates},
      {"conjugate-pairs", 60, true, conjugate_pairs},
      {"self-conjugate-curve", 120, true, self_conjugate_curve},
      {"family-continuation", 60, true, family_continuation},
      {"sequence-hypotheses", 120, true, sequence_hypotheses},
      {"degree-observation", 120, false, degree_observation},
      {"determinism", 60, true, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.time_limit;
    const bool pass = out.pass && in_time;
    if (c.gating && !pass) ++failed;
    std::printf("%s %-24s %s; %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.name.c_str(), out.detail.c_str(),
                seconds, c.time_limit);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
