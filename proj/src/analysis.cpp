#include "orthosect/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace orthosect {

SphereReport verify_sphere(const Tetrahedron& a, const Tetrahedron& b, const Tolerance& tol,
                           bool five_points) {
  const auto orth = edge_orthogonality_residuals(a, b);
  std::array<ClosestPoints, 6> cps;
  std::array<double, 6> gaps{};
  for (int e = 0; e < 6; ++e) {
    cps[static_cast<size_t>(e)] = closest_points(a.edge_line(e), b.edge_line(complement(e)), tol);
    gaps[static_cast<size_t>(e)] = cps[static_cast<size_t>(e)].gap / tol.scene_scale;
  }
  const int skipped =
      five_points ? static_cast<int>(std::max_element(gaps.begin(), gaps.end()) - gaps.begin()) : -1;

  std::ostringstream bad;
  for (int e = 0; e < 6; ++e) {
    if (orth[static_cast<size_t>(e)] > tol.eps_rel)
      bad << " orth" << edge_label(e) << '=' << orth[static_cast<size_t>(e)];
    if (e != skipped && gaps[static_cast<size_t>(e)] > tol.eps_rel)
      bad << " gap" << edge_label(e) << '=' << gaps[static_cast<size_t>(e)];
  }
  if (!bad.str().empty())
    throw GeometryError(ErrorKind::Precondition, "verify_sphere: pair is not orthosecting:" + bad.str());

  SphereReport report;
  for (int e = 0; e < 6; ++e) {
    if (e == skipped) continue;
    report.edges.push_back(e);
    report.points.push_back(0.5 * (cps[static_cast<size_t>(e)].p1 + cps[static_cast<size_t>(e)].p2));
  }
  auto fit = fit_carrier(report.points, tol);
  report.carrier = fit.carrier;
  report.residuals = std::move(fit.residuals);
  report.max_residual = fit.max_residual;

  if (report.carrier.is_sphere()) {
    try {
      const auto centers = orthology_centers(a, b, tol);
      report.center_a = centers.center_a;
      report.center_b = centers.center_b;
      const Point mid = 0.5 * (centers.center_a + centers.center_b);
      report.midpoint_gap = (report.carrier.sphere().center - mid).norm() / tol.scene_scale;
    } catch (const GeometryError& e) {
      if (e.kind() != ErrorKind::FlatPartner) throw;
    }
  }
  return report;
}

Conjugation conjugate(const Tetrahedron& a, const Tetrahedron& b, const Tolerance& tol) {
  verify_sphere(a, b, tol);  // orthosecting precondition
  std::array<Point, 4> reflected;
  for (int i = 0; i < 4; ++i) {
    const auto f = opposite_face(i);
    const std::array<Point, 3> face{a[f[0]], a[f[1]], a[f[2]]};
    const Point source = project_to_plane(b[i], a.face_plane(i));
    reflected[static_cast<size_t>(i)] = isogonal_conjugate(source, face, tol);
  }
  Conjugation out{Tetrahedron{}, chain_from_sources(a, reflected, tol)};
  if (out.chain.closure_spread > tol.eps_rel * tol.scene_scale) {
    std::ostringstream msg;
    msg << "conjugate: reflected pedal triangles disagree on shared feet (" << out.chain.closure_spread << ")";
    throw GeometryError(ErrorKind::Postcondition, msg.str());
  }
  out.partner = reconstruct_tetrahedron(make_spherical(out.chain, tol), tol);
  return out;
}

size_t CurveTrace::vertex_count() const {
  size_t n = 0;
  for (const auto& p : polylines) n += p.points.size();
  return n;
}

Tetrahedron host_for_face(const Tetrahedron& a, int face) {
  const auto f = opposite_face(face);
  return a.permuted({f[0], f[1], f[2], face});
}

FaceFrame face_frame(const Tetrahedron& a, int face) {
  const auto f = opposite_face(face);
  FaceFrame frame;
  frame.origin = a[f[0]];
  frame.e1 = (a[f[1]] - a[f[0]]).normalized();
  frame.normal = a.face_plane(face).normal;
  frame.e2 = frame.normal.cross(frame.e1);
  return frame;
}

Window default_window(const Tetrahedron& a, int face) {
  const auto frame = face_frame(a, face);
  const auto f = opposite_face(face);
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (int v : f) {
    const auto uv = frame.to_face(a[v]);
    lo = lo.cwiseMin(uv);
    hi = hi.cwiseMax(uv);
  }
  const Eigen::Vector2d mid = 0.5 * (lo + hi);
  const Eigen::Vector2d half = 1.5 * (hi - lo);
  return {mid - half, mid + half};
}

namespace {

struct NodeValue {
  int roots = 0;
  std::array<double, 2> f{};
};

struct Sampler {
  const Tetrahedron& host;
  const FaceFrame& frame;
  const Tolerance& tol;

  NodeValue at(const Eigen::Vector2d& uv) const {
    NodeValue v;
    try {
      const auto fs = chain_sphere_residual(host, frame.to_world(uv), tol);
      v.roots = static_cast<int>(std::min<size_t>(fs.size(), 2));
      for (int r = 0; r < v.roots; ++r) v.f[static_cast<size_t>(r)] = fs[static_cast<size_t>(r)];
    } catch (const GeometryError&) {
      v.roots = 0;
    }
    return v;
  }
};

// Jump discontinuities (the fitted sphere flipping through a plane) also
// change sign; only crossings whose refined residual is small are kept.
constexpr double kCrossingResidual = 1e-6;

std::optional<Eigen::Vector2d> refine_crossing(const Sampler& s, int branch, Eigen::Vector2d p, double fp,
                                               Eigen::Vector2d q, double stop) {
  while ((q - p).norm() > stop) {
    const Eigen::Vector2d m = 0.5 * (p + q);
    const auto v = s.at(m);
    if (v.roots <= branch) return std::nullopt;
    const double fm = v.f[static_cast<size_t>(branch)];
    if ((fm >= 0.0) == (fp >= 0.0)) {
      p = m;
      fp = fm;
    } else {
      q = m;
    }
  }
  const Eigen::Vector2d m = 0.5 * (p + q);
  const auto v = s.at(m);
  if (v.roots <= branch || std::abs(v.f[static_cast<size_t>(branch)]) > kCrossingResidual) return std::nullopt;
  return m;
}

// Crossing of one branch on a grid edge. When only one end has the root,
// the edge is cut at the boundary of the real locus first.
std::optional<Eigen::Vector2d> edge_crossing(const Sampler& s, int branch, Eigen::Vector2d p, NodeValue vp,
                                             Eigen::Vector2d q, NodeValue vq, double stop) {
  const bool has_p = vp.roots > branch, has_q = vq.roots > branch;
  if (!has_p && !has_q) return std::nullopt;
  if (!has_p) {
    std::swap(p, q);
    std::swap(vp, vq);
  }
  const double fp = vp.f[static_cast<size_t>(branch)];
  if (!(has_p && has_q)) {
    Eigen::Vector2d inside = p, outside = q;
    NodeValue v_inside = vp;
    while ((outside - inside).norm() > stop) {
      const Eigen::Vector2d m = 0.5 * (inside + outside);
      const auto vm = s.at(m);
      if (vm.roots > branch) {
        inside = m;
        v_inside = vm;
      } else {
        outside = m;
      }
    }
    q = inside;
    vq = v_inside;
  }
  if ((fp >= 0.0) == (vq.f[static_cast<size_t>(branch)] >= 0.0)) return std::nullopt;
  return refine_crossing(s, branch, p, fp, q, stop);
}

template <typename Fn>
void parallel_for(int n, unsigned threads, Fn&& fn) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max(n, 1)));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) fn(k);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

CurveTrace trace_curve(const Tetrahedron& a, int face, const Window& window, int grid,
                       const Tolerance& tol, unsigned threads) {
  if (grid < 16) throw GeometryError(ErrorKind::Precondition, "trace_curve: grid must be >= 16");
  if (!(window.hi.x() > window.lo.x()) || !(window.hi.y() > window.lo.y()))
    throw GeometryError(ErrorKind::Precondition, "trace_curve: empty window");

  const Tetrahedron host = host_for_face(a, face);
  CurveTrace trace;
  trace.face = face;
  trace.frame = face_frame(a, face);
  trace.window = window;
  trace.grid = grid;
  const Sampler sampler{host, trace.frame, tol};

  const int n = grid + 1;
  const Eigen::Vector2d cell = (window.hi - window.lo) / grid;
  auto node_uv = [&](int ix, int iy) {
    return Eigen::Vector2d(window.lo.x() + ix * cell.x(), window.lo.y() + iy * cell.y());
  };

  std::vector<NodeValue> nodes(static_cast<size_t>(n * n));
  parallel_for(n, threads, [&](int iy) {
    for (int ix = 0; ix < n; ++ix) nodes[static_cast<size_t>(iy * n + ix)] = sampler.at(node_uv(ix, iy));
  });
  auto node = [&](int ix, int iy) -> const NodeValue& { return nodes[static_cast<size_t>(iy * n + ix)]; };

  // Grid edges: horizontal edge (ix, iy)-(ix+1, iy) has id 2*(iy*n+ix),
  // vertical edge (ix, iy)-(ix, iy+1) has id 2*(iy*n+ix)+1.
  const double stop = 1e-9 * tol.scene_scale;
  for (int branch = 0; branch < 2; ++branch) {
    std::vector<std::optional<Eigen::Vector2d>> crossings(static_cast<size_t>(2 * n * n));
    parallel_for(n, threads, [&](int iy) {
      for (int ix = 0; ix < n; ++ix) {
        for (int dir = 0; dir < 2; ++dir) {
          const int jx = ix + (dir == 0), jy = iy + (dir == 1);
          if (jx >= n || jy >= n) continue;
          crossings[static_cast<size_t>(2 * (iy * n + ix) + dir)] =
              edge_crossing(sampler, branch, node_uv(ix, iy), node(ix, iy), node_uv(jx, jy), node(jx, jy), stop);
        }
      }
    });

    // Marching squares: segments between crossing ids.
    std::unordered_map<int, std::vector<int>> links;
    auto connect = [&](int u, int v) {
      links[u].push_back(v);
      links[v].push_back(u);
    };
    for (int iy = 0; iy + 1 < n; ++iy)
      for (int ix = 0; ix + 1 < n; ++ix) {
        const std::array<int, 4> ids{2 * (iy * n + ix), 2 * (iy * n + ix + 1) + 1,
                                     2 * ((iy + 1) * n + ix), 2 * (iy * n + ix) + 1};  // bottom, right, top, left
        std::vector<int> present;
        for (int id : ids)
          if (crossings[static_cast<size_t>(id)]) present.push_back(id);
        if (present.size() == 2) {
          connect(present[0], present[1]);
        } else if (present.size() == 4) {
          const auto center = sampler.at(node_uv(ix, iy) + 0.5 * cell);
          const double f00 = node(ix, iy).f[static_cast<size_t>(branch)];
          const bool joined = center.roots > branch &&
                              ((center.f[static_cast<size_t>(branch)] >= 0.0) == (f00 >= 0.0));
          if (joined) {
            connect(ids[0], ids[1]);
            connect(ids[2], ids[3]);
          } else {
            connect(ids[0], ids[3]);
            connect(ids[1], ids[2]);
          }
        }
      }

    // Walk the link graph into polylines: open chains first, then loops.
    std::vector<int> order;
    for (const auto& [id, adj] : links) order.push_back(id);
    std::sort(order.begin(), order.end());
    std::unordered_map<int, bool> used;
    auto walk = [&](int start) {
      Polyline line;
      line.branch = branch;
      int prev = -1, cur = start;
      while (true) {
        used[cur] = true;
        line.points.push_back(*crossings[static_cast<size_t>(cur)]);
        int next = -1;
        for (int v : links[cur])
          if (v != prev && !used[v]) {
            next = v;
            break;
          }
        if (next < 0) {
          for (int v : links[cur])
            if (v == start && v != prev && line.points.size() > 2) line.closed = true;
          break;
        }
        prev = cur;
        cur = next;
      }
      if (line.points.size() >= 2) trace.polylines.push_back(std::move(line));
    };
    for (int id : order)
      if (!used[id] && links[id].size() == 1) walk(id);
    for (int id : order)
      if (!used[id]) walk(id);
  }

  for (const auto& line : trace.polylines)
    for (const auto& uv : line.points) {
      const auto v = sampler.at(uv);
      if (v.roots > line.branch)
        trace.residual_bound = std::max(trace.residual_bound, std::abs(v.f[static_cast<size_t>(line.branch)]));
    }
  return trace;
}

constexpr double kGapReach = 1.0;  // grid cells

LineHits count_line_hits(const CurveTrace& trace, const Eigen::Vector2d& point,
                         const Eigen::Vector2d& direction) {
  const Eigen::Vector2d d = direction.normalized();
  const Eigen::Vector2d normal(-d.y(), d.x());
  const double cell = ((trace.window.hi - trace.window.lo) / std::max(trace.grid, 1)).norm();

  std::vector<double> along;
  LineHits hits;
  for (const auto& line : trace.polylines) {
    const size_t m = line.points.size();
    const size_t segments = line.closed ? m : m - 1;
    for (size_t k = 0; k < segments; ++k) {
      const Eigen::Vector2d& p = line.points[k];
      const Eigen::Vector2d& q = line.points[(k + 1) % m];
      const double sp = normal.dot(p - point);
      const double sq = normal.dot(q - point);
      // Half-open test so a line through a shared vertex counts once.
      if ((sp > 0.0) == (sq > 0.0)) continue;
      const double lambda = sp / (sp - sq);
      const Eigen::Vector2d x = p + lambda * (q - p);
      if ((x.array() < trace.window.lo.array()).any() || (x.array() > trace.window.hi.array()).any()) continue;
      ++hits.count;
      const Eigen::Vector2d seg = (q - p).normalized();
      if (std::abs(seg.x() * d.y() - seg.y() * d.x()) < 0.1) ++hits.flagged;
      along.push_back(d.dot(x - point));
    }
  }
  std::sort(along.begin(), along.end());
  for (size_t k = 1; k < along.size(); ++k)
    if (along[k] - along[k - 1] < cell) ++hits.flagged;

  // Open ends inside the window mark gaps the line may slip through.
  const auto on_border = [&](const Eigen::Vector2d& p) {
    const double margin = 1e-9 * cell;
    return (p.array() <= trace.window.lo.array() + margin).any() ||
           (p.array() >= trace.window.hi.array() - margin).any();
  };
  for (const auto& line : trace.polylines) {
    if (line.closed) continue;
    for (const auto* end : {&line.points.front(), &line.points.back()})
      if (!on_border(*end) && std::abs(normal.dot(*end - point)) < kGapReach * cell) ++hits.flagged;
  }
  return hits;
}

DegreeEstimate estimate_degree(const CurveTrace& trace, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DegreeEstimate est;
  for (int k = 0; k < trials; ++k) {
    const Eigen::Vector2d p(trace.window.lo.x() + unit(rng) * (trace.window.hi.x() - trace.window.lo.x()),
                            trace.window.lo.y() + unit(rng) * (trace.window.hi.y() - trace.window.lo.y()));
    const double angle = unit(rng) * 3.14159265358979323846;
    const auto hits = count_line_hits(trace, p, {std::cos(angle), std::sin(angle)});
    est.lines.push_back(hits);
    ++est.histogram[hits.count];
    est.max_count = std::max(est.max_count, hits.count);
  }
  est.nine_observed = est.histogram.count(9) > 0;
  est.nine_exceeded = est.max_count > 9;
  return est;
}

SequenceRun iterate_sequence(const Tetrahedron& b0, const Tetrahedron& b1, int n, const Tolerance& tol,
                             double cluster_radius) {
  SequenceRun run;
  run.cluster_radius = cluster_radius;
  run.terms = {b0, b1};
  for (int m = 1; m < n; ++m) {
    try {
      run.terms.push_back(conjugate(run.terms[static_cast<size_t>(m)], run.terms[static_cast<size_t>(m - 1)], tol).partner);
    } catch (const GeometryError& e) {
      run.failed_step = m;
      run.failure = e.what();
      break;
    }
  }

  for (size_t m = 0; m + 1 < run.terms.size(); ++m) {
    try {
      run.pair_reports.push_back(verify_sphere(run.terms[m], run.terms[m + 1], tol));
    } catch (const GeometryError& e) {
      if (!run.failed_step) {
        run.failed_step = static_cast<int>(m);
        run.failure = e.what();
      }
      break;
    }
  }
  if (run.pair_reports.empty()) return run;

  const auto& carrier = run.pair_reports.front().carrier;
  for (const auto& rep : run.pair_reports) {
    for (const auto& p : rep.points)
      run.shared_residual = std::max(run.shared_residual, std::abs(carrier.signed_residual(p)));
    if (rep.center_a) run.centers.push_back(*rep.center_a);
    if (rep.center_b) run.centers.push_back(*rep.center_b);
  }
  const double radius = cluster_radius * tol.scene_scale;
  for (const auto& c : run.centers)
    if (std::none_of(run.distinct_centers.begin(), run.distinct_centers.end(),
                     [&](const Point& d) { return (d - c).norm() <= radius; }))
      run.distinct_centers.push_back(c);
  return run;
}

}  // namespace orthosect
