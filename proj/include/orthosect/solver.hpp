#pragma once

#include "orthosect/geom.hpp"
#include "orthosect/orthology.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace orthosect {

/// Rows 0..5: signed normalized orthogonality residuals, indexed by A edge.
/// Rows 6..11: normalized triple products det[A_i - A_j, B_k - B_l, B_k - A_i]
/// / (|A_i - A_j| |B_k - B_l| scale), same order.
using ResidualVector = Eigen::Matrix<double, 12, 1>;
using ResidualJacobian = Eigen::Matrix<double, 12, 12>;
using Coordinates = Eigen::Matrix<double, 12, 1>;

Coordinates to_coordinates(const Tetrahedron& t);
Tetrahedron from_coordinates(const Coordinates& x);

ResidualVector orthosect_residuals(const Tetrahedron& a, const Tetrahedron& b, double scale);

/// Derivative of orthosect_residuals with respect to B's 12 coordinates
/// (B_1.x, B_1.y, B_1.z, B_2.x, ...).
ResidualJacobian residual_jacobian(const Tetrahedron& a, const Tetrahedron& b, double scale);

double max_abs(const ResidualVector& r);

struct SolverConfig {
  std::uint64_t seed = 0;
  int restarts = 64;
  int max_iterations = 300;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 0.3;
  double accept_residual = 1e-10;
  double min_edge = 1e-3;         // fraction of scene_scale
  double max_coordinate = 1e2;    // fraction of scene_scale, measured from A's centroid
  double min_volume = 1e-6;       // fraction of scene_scale^3
  double distinct = 1e-3;         // fraction of scene_scale
  unsigned threads = 0;           // 0: hardware concurrency
  /// Drop one intersection condition (index into kEdges) to sample the
  /// five-intersection configurations.
  std::optional<int> relaxed_intersection;
};

struct RestartDiagnostic {
  int restart = 0;
  int iterations = 0;
  double max_residual = 0.0;
  std::string status;  // "accepted", "duplicate", "not-converged", or a filter name
};

struct SolveResult {
  std::vector<Tetrahedron> solutions;
  std::vector<double> max_residuals;
  std::vector<RestartDiagnostic> diagnostics;
};

/// Partners B orthosecting A, from deterministic random restarts in a box of
/// side 2 * scale around A's centroid.
SolveResult solve(const Tetrahedron& a, const SolverConfig& cfg);

/// Reason a candidate fails the degeneracy filters, or empty.
std::string degeneracy_reason(const Tetrahedron& a, const Tetrahedron& b, const SolverConfig& cfg,
                              double scale);

/// Number of singular values of J at most rank_tol times the largest.
int numerical_nullity(const ResidualJacobian& j, double rank_tol = 1e-8);

struct SolutionBranch {
  std::vector<Tetrahedron> samples;
  std::vector<double> max_residuals;
  std::vector<int> nullities;
  std::vector<double> singular_ratios;  // sigma_12 / sigma_11
  double step = 0.0;
  bool branch_point = false;
  std::string stop_reason;  // empty when all steps completed
};

/// Predictor-corrector continuation along the one-parameter solution family.
/// `direction` (+1 or -1) selects the arc.
SolutionBranch trace_family(const Tetrahedron& a, const Tetrahedron& b0, int steps, double h,
                            const SolverConfig& cfg, int direction = 1);

/// Partner whose vertex B_4 projects to `b4` on face (1,2,3), built from the
/// spherical chain with the root_index-th spherical parameter and polished
/// onto the solution set. Throws unless the max orthosect residual of the
/// result is at most curve_eps.
Tetrahedron solve_from_curve_point(const Tetrahedron& a, const Point& b4, int root_index,
                                   const Tolerance& tol, double curve_eps = 1e-6);

}  // namespace orthosect
