#include "orthosect/solver.hpp"

#include "orthosect/pedal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace orthosect {

Coordinates to_coordinates(const Tetrahedron& t) {
  Coordinates x;
  for (int i = 0; i < 4; ++i) x.segment<3>(3 * i) = t[i];
  return x;
}

Tetrahedron from_coordinates(const Coordinates& x) {
  std::array<Point, 4> v;
  for (int i = 0; i < 4; ++i) v[static_cast<size_t>(i)] = x.segment<3>(3 * i);
  return Tetrahedron(v);
}

double max_abs(const ResidualVector& r) { return r.cwiseAbs().maxCoeff(); }

ResidualVector orthosect_residuals(const Tetrahedron& a, const Tetrahedron& b, double scale) {
  ResidualVector r;
  for (int e = 0; e < 6; ++e) {
    const auto& ea = kEdges[e];
    const auto& eb = kEdges[complement(e)];
    const Vec3 da = a[ea.i] - a[ea.j];
    const Vec3 db = b[eb.i] - b[eb.j];
    const double la = da.norm(), lb = db.norm();
    if (!(la > 0.0) || !(lb > 0.0))
      throw GeometryError(ErrorKind::Degenerate, "zero-length edge in pairing " + edge_label(e));
    const Vec3 w = b[eb.i] - a[ea.i];
    r(e) = da.dot(db) / (la * lb);
    r(6 + e) = da.dot(db.cross(w)) / (la * lb * scale);
  }
  return r;
}

ResidualJacobian residual_jacobian(const Tetrahedron& a, const Tetrahedron& b, double scale) {
  ResidualJacobian j = ResidualJacobian::Zero();
  for (int e = 0; e < 6; ++e) {
    const auto& ea = kEdges[e];
    const auto& eb = kEdges[complement(e)];
    const Vec3 da = a[ea.i] - a[ea.j];
    const Vec3 db = b[eb.i] - b[eb.j];
    const Vec3 w = b[eb.i] - a[ea.i];
    const double la = da.norm(), lb = db.norm();
    const double dot = da.dot(db);
    const double triple = da.dot(db.cross(w));

    // d(orth)/d(db); B_k contributes +, B_l contributes -.
    const Vec3 g_orth = da / (la * lb) - dot * db / (la * lb * lb * lb);
    // d(triple)/d(db) = w x da, d(triple)/d(w) = da x db.
    const Vec3 g_db = w.cross(da) / (la * lb * scale) - triple * db / (la * lb * lb * lb * scale);
    const Vec3 g_w = da.cross(db) / (la * lb * scale);

    j.block<1, 3>(e, 3 * eb.i) += g_orth.transpose();
    j.block<1, 3>(e, 3 * eb.j) -= g_orth.transpose();
    j.block<1, 3>(6 + e, 3 * eb.i) += (g_db + g_w).transpose();
    j.block<1, 3>(6 + e, 3 * eb.j) -= g_db.transpose();
  }
  return j;
}

int numerical_nullity(const ResidualJacobian& j, double rank_tol) {
  Eigen::JacobiSVD<ResidualJacobian> svd(j);
  const auto& s = svd.singularValues();
  int n = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(k) <= rank_tol * s(0)) ++n;
  return n;
}

std::string degeneracy_reason(const Tetrahedron& a, const Tetrahedron& b, const SolverConfig& cfg,
                              double scale) {
  for (int e = 0; e < 6; ++e)
    if (b.edge_length(e) < cfg.min_edge * scale) return "min-edge";
  const Point c = a.centroid();
  for (int i = 0; i < 4; ++i)
    if ((b[i] - c).cwiseAbs().maxCoeff() > cfg.max_coordinate * scale) return "max-coordinate";
  if (std::abs(b.signed_volume()) < cfg.min_volume * scale * scale * scale) return "flat";
  return {};
}

namespace {

struct Attempt {
  Coordinates x;
  int iterations = 0;
  double max_residual = 0.0;
  bool converged = false;
};

ResidualVector masked(ResidualVector r, const SolverConfig& cfg) {
  if (cfg.relaxed_intersection) r(6 + *cfg.relaxed_intersection) = 0.0;
  return r;
}

ResidualJacobian masked(ResidualJacobian j, const SolverConfig& cfg) {
  if (cfg.relaxed_intersection) j.row(6 + *cfg.relaxed_intersection).setZero();
  return j;
}

// Levenberg-Marquardt on the residual vector; the solution set is
// positive-dimensional, so the damping term I keeps steps minimal-norm.
Attempt damped_least_squares(const Tetrahedron& a, Coordinates x, const SolverConfig& cfg, double scale) {
  Attempt out;
  double lambda = cfg.initial_damping;
  auto eval = [&](const Coordinates& y, ResidualVector& r) {
    try {
      r = masked(orthosect_residuals(a, from_coordinates(y), scale), cfg);
      return r.allFinite();
    } catch (const GeometryError&) {
      return false;
    }
  };
  ResidualVector r;
  if (!eval(x, r)) {
    out.x = x;
    out.max_residual = std::numeric_limits<double>::infinity();
    return out;
  }
  double cost = r.squaredNorm();
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (max_abs(r) <= 1e-14) break;
    const ResidualJacobian j = masked(residual_jacobian(a, from_coordinates(x), scale), cfg);
    const Eigen::Matrix<double, 12, 12> jtj = j.transpose() * j;
    const Coordinates g = j.transpose() * r;
    bool improved = false;
    for (int inner = 0; inner < 12 && !improved; ++inner) {
      const Eigen::Matrix<double, 12, 12> m = jtj + (lambda / (scale * scale)) * Eigen::Matrix<double, 12, 12>::Identity();
      const Coordinates step = -m.ldlt().solve(g);
      const Coordinates trial = x + step;
      ResidualVector rt;
      if (eval(trial, rt) && rt.squaredNorm() < cost) {
        x = trial;
        r = rt;
        cost = rt.squaredNorm();
        lambda = std::max(lambda * cfg.damping_decrease, 1e-15);
        improved = true;
      } else {
        lambda *= cfg.damping_increase;
      }
    }
    if (!improved) break;
  }
  out.x = x;
  out.iterations = it;
  out.max_residual = max_abs(r);
  out.converged = out.max_residual <= cfg.accept_residual;
  return out;
}

}  // namespace

SolveResult solve(const Tetrahedron& a, const SolverConfig& cfg) {
  const double scale = a.diameter();
  Tolerance tol;
  tol.scene_scale = scale;
  if (a.is_flat(tol)) throw GeometryError(ErrorKind::Precondition, "solve: host tetrahedron is flat");
  if (cfg.restarts < 1) throw GeometryError(ErrorKind::Precondition, "solve: restarts must be >= 1");

  const Point centroid = a.centroid();
  std::vector<Attempt> attempts(static_cast<size_t>(cfg.restarts));
  auto run = [&](int restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32), static_cast<std::uint32_t>(restart)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    Coordinates x;
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) x(3 * i + k) = centroid(k) + scale * box(rng);
    attempts[static_cast<size_t>(restart)] = damped_least_squares(a, x, cfg, scale);
  };

  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.restarts));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int r = static_cast<int>(w); r < cfg.restarts; r += static_cast<int>(workers)) run(r);
    });
  for (auto& t : pool) t.join();

  SolveResult out;
  for (int r = 0; r < cfg.restarts; ++r) {
    const auto& at = attempts[static_cast<size_t>(r)];
    RestartDiagnostic d{r, at.iterations, at.max_residual, {}};
    if (!at.converged) {
      d.status = "not-converged";
    } else {
      const Tetrahedron b = from_coordinates(at.x);
      d.status = degeneracy_reason(a, b, cfg, scale);
      if (d.status.empty()) {
        const bool dup = std::any_of(out.solutions.begin(), out.solutions.end(), [&](const Tetrahedron& s) {
          double diff = 0.0;
          for (int i = 0; i < 4; ++i) diff = std::max(diff, (s[i] - b[i]).norm());
          return diff < cfg.distinct * scale;
        });
        if (dup) {
          d.status = "duplicate";
        } else {
          d.status = "accepted";
          out.solutions.push_back(b);
          out.max_residuals.push_back(at.max_residual);
        }
      }
    }
    out.diagnostics.push_back(d);
  }
  return out;
}

namespace {

struct TangentInfo {
  Coordinates tangent;
  int nullity = 0;
  double ratio = 0.0;
};

TangentInfo tangent_at(const Tetrahedron& a, const Coordinates& x, double scale) {
  const ResidualJacobian j = residual_jacobian(a, from_coordinates(x), scale);
  Eigen::JacobiSVD<ResidualJacobian> svd(j, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  TangentInfo info;
  info.tangent = svd.matrixV().col(11);
  info.ratio = s(10) > 0.0 ? s(11) / s(10) : 1.0;
  for (int k = 0; k < 12; ++k)
    if (s(k) <= 1e-8 * s(0)) ++info.nullity;
  return info;
}

// Newton corrector restricted to the hyperplane through the predicted point
// orthogonal to the tangent.
bool correct(const Tetrahedron& a, Coordinates& x, const Coordinates& predicted,
             const Coordinates& tangent, double scale, double& residual) {
  for (int it = 0; it < 30; ++it) {
    ResidualVector r;
    try {
      r = orthosect_residuals(a, from_coordinates(x), scale);
    } catch (const GeometryError&) {
      return false;
    }
    residual = max_abs(r);
    if (!std::isfinite(residual)) return false;
    if (residual <= 1e-14) return true;
    Eigen::Matrix<double, 13, 12> m;
    Eigen::Matrix<double, 13, 1> rhs;
    m.topRows<12>() = residual_jacobian(a, from_coordinates(x), scale);
    m.row(12) = tangent.transpose();
    rhs.head<12>() = -r;
    rhs(12) = -tangent.dot(x - predicted);
    const Coordinates dx = m.colPivHouseholderQr().solve(rhs);
    x += dx;
    if (dx.norm() <= 1e-15 * scale) break;
  }
  try {
    residual = max_abs(orthosect_residuals(a, from_coordinates(x), scale));
  } catch (const GeometryError&) {
    return false;
  }
  return residual <= 1e-12;
}

}  // namespace

SolutionBranch trace_family(const Tetrahedron& a, const Tetrahedron& b0, int steps, double h,
                            const SolverConfig& cfg, int direction) {
  const double scale = a.diameter();
  SolutionBranch branch;
  branch.step = h;
  const double r0 = max_abs(orthosect_residuals(a, b0, scale));
  if (r0 > 1e-9) {
    std::ostringstream msg;
    msg << "trace_family: start is not a solution (max residual " << r0 << ")";
    throw GeometryError(ErrorKind::Precondition, msg.str());
  }

  Coordinates x = to_coordinates(b0);
  auto info = tangent_at(a, x, scale);
  Coordinates tangent = direction >= 0 ? info.tangent : Coordinates(-info.tangent);
  branch.samples.push_back(b0);
  branch.max_residuals.push_back(r0);
  branch.nullities.push_back(info.nullity);
  branch.singular_ratios.push_back(info.ratio);
  if (info.nullity >= 2) {
    branch.branch_point = true;
    branch.stop_reason = "branch-point";
    return branch;
  }

  for (int step = 0; step < steps; ++step) {
    double local_h = h;
    bool ok = false;
    Coordinates next;
    double residual = 0.0;
    for (int halving = 0; halving < 6 && !ok; ++halving, local_h *= 0.5) {
      const Coordinates predicted = x + local_h * tangent;
      next = predicted;
      ok = correct(a, next, predicted, tangent, scale, residual);
    }
    if (!ok) {
      branch.stop_reason = "corrector-divergence";
      break;
    }
    const Tetrahedron b = from_coordinates(next);
    if (auto why = degeneracy_reason(a, b, cfg, scale); !why.empty()) {
      branch.stop_reason = why;
      break;
    }
    auto next_info = tangent_at(a, next, scale);
    if (next_info.tangent.dot(tangent) < 0.0) next_info.tangent = -next_info.tangent;
    x = next;
    tangent = next_info.tangent;
    branch.samples.push_back(b);
    branch.max_residuals.push_back(residual);
    branch.nullities.push_back(next_info.nullity);
    branch.singular_ratios.push_back(next_info.ratio);
    if (next_info.nullity >= 2) {
      branch.branch_point = true;
      branch.stop_reason = "branch-point";
      break;
    }
  }
  return branch;
}

constexpr double kPolishSlack = 100.0;

Tetrahedron solve_from_curve_point(const Tetrahedron& a, const Point& b4, int root_index,
                                   const Tolerance& tol, double curve_eps) {
  const auto params = spherical_parameters(a, b4, tol);
  if (root_index < 0 || root_index >= static_cast<int>(params.size())) {
    std::ostringstream msg;
    msg << "solve_from_curve_point: root index " << root_index << " unavailable (" << params.size()
        << " real spherical parameters)";
    throw GeometryError(ErrorKind::Precondition, msg.str());
  }
  const double t = params[static_cast<size_t>(root_index)];
  const double f = chain_sphere_residual_at(a, b4, t, tol);
  if (std::abs(f) > curve_eps) {
    std::ostringstream msg;
    msg << "solve_from_curve_point: point is off the curve (chain sphere residual " << f << ")";
    throw GeometryError(ErrorKind::Precondition, msg.str());
  }
  const auto chain = complete_chain(a, b4, t, tol);
  const auto fit = fit_carrier(chain.feet, tol);
  // Reconstruction amplifies the residual of b4 by the conditioning of the
  // chain; the partner is polished onto the solution set and checked below.
  Tolerance relaxed = tol;
  relaxed.eps_rel = std::max(tol.eps_rel, kPolishSlack * curve_eps);
  const auto rough = reconstruct_tetrahedron(SphericalChain{chain, fit.carrier, fit.max_residual}, relaxed);

  const double scale = a.diameter();
  Coordinates x = to_coordinates(rough);
  double residual = max_abs(orthosect_residuals(a, rough, scale));
  for (int it = 0; it < 10 && residual > 1e-14; ++it) {
    const auto b = from_coordinates(x);
    // Minimum-norm step: no motion along the family.
    const Coordinates next =
        x - residual_jacobian(a, b, scale).completeOrthogonalDecomposition().solve(orthosect_residuals(a, b, scale));
    const double r = max_abs(orthosect_residuals(a, from_coordinates(next), scale));
    if (!(r < residual)) break;
    x = next;
    residual = r;
  }
  if (residual > curve_eps) {
    std::ostringstream msg;
    msg << "solve_from_curve_point: partner does not orthosect (max residual " << residual << ")";
    throw GeometryError(ErrorKind::Postcondition, msg.str());
  }
  return from_coordinates(x);
}

}  // namespace orthosect
