#pragma once

#include "orthosect/geom.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace orthosect {

/// Unordered vertex pair (0-based indices, i < j).
struct Edge {
  int i = 0;
  int j = 1;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// The six edges of a tetrahedron in the fixed order 12, 13, 14, 23, 24, 34.
/// Edge e and edge 5 - e are complementary (non-corresponding).
inline constexpr std::array<Edge, 6> kEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

inline constexpr int complement(int edge) { return 5 - edge; }

/// Index into kEdges of the unordered pair {a, b}.
int edge_index(int a, int b);

/// 1-based label such as "12" or "34".
std::string edge_label(int edge);

/// The vertices of the face opposite `vertex`, in ascending order.
std::array<int, 3> opposite_face(int vertex);

class Tetrahedron {
 public:
  Tetrahedron() = default;
  explicit Tetrahedron(const std::array<Point, 4>& vertices);

  const Point& operator[](int i) const { return vertices_[static_cast<size_t>(i)]; }
  const std::array<Point, 4>& vertices() const { return vertices_; }

  double signed_volume() const { return signed_volume_; }
  double diameter() const;
  bool is_flat(const Tolerance& tol) const;

  Point centroid() const;
  Plane face_plane(int opposite_vertex) const;
  Line edge_line(int edge) const;
  double edge_length(int edge) const;

  /// Vertex k of the result is vertex perm[k] of this.
  Tetrahedron permuted(const std::array<int, 4>& perm) const;
  Tetrahedron translated(const Vec3& t) const;

 private:
  std::array<Point, 4> vertices_{};
  double signed_volume_ = 0.0;
};

/// Diameter of the union of the vertices of A and B.
double pair_scale(const Tetrahedron& a, const Tetrahedron& b);

/// One non-corresponding edge pairing: edge (i,j) of A against (k,l) of B.
struct EdgePairing {
  Edge a_edge;
  Edge b_edge;
};

std::array<EdgePairing, 6> edge_pairings();

/// |(A_i - A_j).(B_k - B_l)| / (|A_i - A_j| |B_k - B_l|) per pairing, indexed
/// by the A edge. Throws Degenerate naming any zero-length edge.
std::array<double, 6> edge_orthogonality_residuals(const Tetrahedron& a, const Tetrahedron& b);

struct OrthologyReport {
  std::array<double, 6> residuals{};
  std::array<Line, 4> perpendiculars_a{};  // through A_i, normal to B's face opposite B_i
  std::array<Line, 4> perpendiculars_b{};
  Point center_a = Point::Zero();
  Point center_b = Point::Zero();
  double spread_a = 0.0;
  double spread_b = 0.0;
};

/// Orthology centers of A with respect to B and of B with respect to A.
/// Throws NotOrthologic when some residual exceeds eps_rel and FlatPartner
/// when the perpendiculars of one side are all parallel.
OrthologyReport orthology_centers(const Tetrahedron& a, const Tetrahedron& b, const Tolerance& tol);

/// Canonical offsets: face plane i passes through A_i.
std::array<double, 4> default_offsets(const Tetrahedron& a, const Point& center);

/// Orthologic partner of A whose face i lies in {x : n_i.x = offsets[i]}
/// with n_i the unit vector along A_i - center. The orthology center of A
/// with respect to the result is `center`.
Tetrahedron construct_orthologic(const Tetrahedron& a, const Point& center,
                                 const std::array<double, 4>& offsets, const Tolerance& tol);

struct Labeling {
  std::array<int, 4> permutation{0, 1, 2, 3};
  double max_residual = 0.0;
  std::vector<std::array<int, 4>> ties;  // every minimizing permutation, including `permutation`
};

/// Relabeling of B (B'_k = B_perm[k]) minimizing the largest orthogonality
/// residual against A.
Labeling find_labeling(const Tetrahedron& a, const Tetrahedron& b, double tie_tolerance = 1e-9);

}  // namespace orthosect
