#pragma once

#include "empcnet/common.hpp"

namespace empcnet {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Vec x;
  double objective = 0.0;
};

// max c'x  s.t.  Ax <= b, x free.
//
// Two-phase dense tableau simplex with Bland's anti-cycling rule. Free
// variables are split into nonnegative parts; rows with negative right-hand
// side get an artificial column for phase one.
LpResult maximize(const Vec& c, const Mat& A, const Vec& b, double tol = 1e-9);

}  // namespace empcnet
