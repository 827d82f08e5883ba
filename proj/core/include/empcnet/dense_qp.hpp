#pragma once

#include <vector>

#include "empcnet/common.hpp"

namespace empcnet {

struct QpOptions {
  double tolerance = 1e-9;   // primal feasibility / dual sign
  int max_iterations = 0;    // 0 picks 10 * (vars + rows) + 100
};

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit };

struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Vec x;
  Vec multipliers;              // one per inequality row, zero if inactive
  std::vector<int> active_set;  // sorted working-set rows at termination
  int iterations = 0;
  double kkt_residual = 0.0;
};

// Strictly convex dense QP  min 1/2 x'Hx + c'x  s.t.  Gx <= h.
//
// Dual active-set method (Goldfarb-Idnani): starts from the unconstrained
// minimizer and adds the most violated row each major iteration, dropping
// rows whose multiplier would turn negative. The working set stays
// linearly independent, so the returned active set satisfies LICQ.
// Projections are refactored from scratch per iteration; intended for the
// small problems produced by condensing short horizons.
class DenseQpSolver {
 public:
  DenseQpSolver() = default;
  explicit DenseQpSolver(QpOptions options) : options_(options) {}

  // Throws ConfigError if H is not positive definite or shapes disagree.
  QpResult solve(const Mat& H, const Vec& c, const Mat& G, const Vec& h) const;

 private:
  QpOptions options_;
};

// max |Hx + c + G'mu|, max(Gx - h)+, max(-mu)+, max |mu_i (G_i x - h_i)|.
double kkt_residual(const Mat& H, const Vec& c, const Mat& G, const Vec& h,
                    const Vec& x, const Vec& mu);

}  // namespace empcnet
