#pragma once

#include <optional>
#include <vector>

#include "empcnet/common.hpp"

namespace empcnet {

// Axis-aligned box used both as the explored parameter set and as the
// bounding set that keeps every region polytope bounded.
struct DomainBox {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Vec center() const { return 0.5 * (lower + upper); }
  double diameter() const { return (upper - lower).norm(); }
  bool contains(const Vec& x, double tol = 0.0) const {
    return ((x - upper).array() <= tol).all() && ((lower - x).array() <= tol).all();
  }
  Vec clip(const Vec& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  // Rows [I; -I] with rhs [upper; -lower].
  Mat halfspace_matrix() const;
  Vec halfspace_rhs() const;
  void validate() const;
};

struct ChebyshevBall {
  Vec center;
  double radius = 0.0;  // <= 0: empty or lower-dimensional
};

// Scales each row of (H, k) to unit Euclidean norm. Rows with norm below
// `zero_tol` are dropped when trivially satisfied (k >= -zero_tol); if such
// a row is violated the set is empty and std::nullopt is returned.
struct HalfspaceSet {
  Mat H;
  Vec k;
};
std::optional<HalfspaceSet> normalize_rows(const Mat& H, const Vec& k, double zero_tol = 1e-12);

// Largest inscribed ball of {x : Hx <= k}, one LP. Throws NumericError when
// the set is unbounded (intersect with a box first).
ChebyshevBall chebyshev_center(const Mat& H, const Vec& k, double tol = 1e-9);

// Removes redundant rows with one LP per row: row j is kept only if
// maximizing h_j'x over the remaining rows (plus h_j'x <= k_j + 1) exceeds
// k_j by more than `tol`. Rows are normalized first. Throws ConfigError if
// the set is empty.
HalfspaceSet reduce_polyhedron(const Mat& H, const Vec& k, double tol = 1e-9);

// Chebyshev center of facet j of {x : Hx <= k}, computed inside the facet's
// hyperplane. Returns std::nullopt if the facet has no relative interior.
std::optional<ChebyshevBall> facet_center(const Mat& H, const Vec& k, Eigen::Index j,
                                          double tol = 1e-9);

inline bool contains(const Mat& H, const Vec& k, const Vec& x, double tol) {
  return H.rows() == 0 || ((H * x - k).array() <= tol).all();
}

}  // namespace empcnet
