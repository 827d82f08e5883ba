#pragma once

#include <optional>
#include <vector>

#include "empcnet/common.hpp"

namespace empcnet {

// Constrained discrete-time plant x+ = A x + B u with box constraints and a
// quadratic finite-horizon cost
//   sum_{k<N} (x_k' Qx x_k + u_k' Ru u_k) + x_N' Qf x_N.
// The output matrix C is carried for completeness; controllers use full state.
struct LtiProblem {
  Mat A;
  Mat B;
  Mat C;
  Vec x_min;
  Vec x_max;
  Vec u_min;
  Vec u_max;
  int horizon = 1;
  Mat Qx;
  Mat Ru;
  std::optional<Mat> Qf;  // falls back to Qx

  int num_states() const { return static_cast<int>(A.rows()); }
  int num_inputs() const { return static_cast<int>(B.cols()); }
  const Mat& terminal_cost() const { return Qf ? *Qf : Qx; }

  // Throws ConfigError describing the first violated invariant.
  void validate() const;
};

enum class RowKind { kInputUpper, kInputLower, kStateUpper, kStateLower };

// Provenance of one stacked inequality row: which step and component it bounds.
struct ConstraintRow {
  RowKind kind;
  int step;       // input rows: u_step; state rows: x_step (1..N)
  int component;
};

// Condensed problem  min_U 1/2 U'QU + x'RU + 1/2 x'Yx  s.t.  GU <= W + Ex.
struct CondensedQp {
  Mat Y;  // n x n
  Mat Q;  // Nm x Nm
  Mat R;  // n x Nm
  Mat G;  // q x Nm
  Vec W;  // q
  Mat E;  // q x n
  int horizon = 0;
  int num_inputs = 0;
  std::vector<ConstraintRow> rows;

  int num_states() const { return static_cast<int>(Y.rows()); }
  int num_vars() const { return static_cast<int>(Q.rows()); }
  int num_rows() const { return static_cast<int>(G.rows()); }

  double objective(const Vec& x, const Vec& U) const;
  Vec rhs(const Vec& x) const { return W + E * x; }
  bool feasible(const Vec& x, const Vec& U, double tol = 0.0) const;
};

// Batch prediction X = Sx x0 + Su U for the stacked states x_1..x_N.
struct Prediction {
  Mat Sx;  // Nn x n
  Mat Su;  // Nn x Nm
};

Prediction predict_matrices(const Mat& A, const Mat& B, int horizon);

// Expands the dynamics over the horizon into the compact QP. State boxes
// constrain x_1..x_N; rows whose bound is infinite are omitted.
CondensedQp condense(const LtiProblem& problem);

// Infinite-horizon LQR cost-to-go from the discrete algebraic Riccati
// equation, by fixed-point iteration. Used as an optional terminal weight.
Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
               int max_iterations = 100000, double tol = 1e-12);

}  // namespace empcnet
