#include <gtest/gtest.h>

#include <random>

#include "empcnet/lti.hpp"
#include "empcnet/serialize.hpp"
#include "fixtures.hpp"
#include "oracles/oracles.hpp"

using namespace empcnet;

namespace {

LtiProblem identity_problem() {
  LtiProblem p;
  p.A = Mat::Identity(2, 2);
  p.B = Mat::Identity(2, 2);
  p.C = Mat::Identity(2, 2);
  p.x_min = Vec::Constant(2, -kInfiniteBound);
  p.x_max = Vec::Constant(2, kInfiniteBound);
  p.u_min = Vec::Constant(2, -kInfiniteBound);
  p.u_max = Vec::Constant(2, kInfiniteBound);
  p.horizon = 1;
  p.Qx = Mat::Identity(2, 2);
  p.Ru = Mat::Identity(2, 2);
  p.Qf = Mat(Mat::Zero(2, 2));
  return p;
}

}  // namespace

TEST(Condense, OneStepHandExpansion) {
  // Cost x'x + u'u with a zero terminal weight: the Hessian of
  // 1/2 U'QU + x'RU + 1/2 x'Yx is 2 I, with no cross term.
  const CondensedQp qp = condense(identity_problem());
  EXPECT_TRUE(qp.Q.isApprox(2.0 * Mat::Identity(2, 2), 1e-15));
  EXPECT_TRUE(qp.R.isZero(1e-15));
  EXPECT_TRUE(qp.Y.isApprox(2.0 * Mat::Identity(2, 2), 1e-15));
  EXPECT_EQ(qp.num_rows(), 0);
}

TEST(Condense, ZeroInputCostIsFreeResponseCost) {
  std::mt19937_64 rng(3);
  const LtiProblem p = fixtures::random_problem(rng, 3, 2, 4);
  const CondensedQp qp = condense(p);
  const Vec x = Vec::LinSpaced(3, -1.0, 2.0);
  const Vec U = Vec::Zero(8);
  double expected = 0.0;
  Vec xk = x;
  for (int k = 0; k < 4; ++k) {
    expected += xk.dot(p.Qx * xk);
    xk = p.A * xk;
  }
  expected += xk.dot(*p.Qf * xk);
  EXPECT_NEAR(qp.objective(x, U), expected, 1e-10 * (1.0 + std::abs(expected)));
}

TEST(Condense, ObjectiveMatchesRolloutCost) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const LtiProblem p = fixtures::random_problem(rng, 2 + trial % 3, 1 + trial % 2, 3);
    const CondensedQp qp = condense(p);
    for (int s = 0; s < 100; ++s) {
      const Vec x = Vec::NullaryExpr(p.num_states(), [&] { return normal(rng); });
      const Vec U = Vec::NullaryExpr(qp.num_vars(), [&] { return normal(rng); });
      const double reference = oracle::rollout_cost(p, x, U);
      EXPECT_NEAR(qp.objective(x, U), reference, 1e-9 * (1.0 + std::abs(reference)));
    }
  }
}

TEST(Condense, ConstraintSetMatchesRolloutBoxes) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.2);
  int agree_infeasible = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const LtiProblem p = fixtures::random_problem(rng, 2, 1 + trial % 2, 3);
    const CondensedQp qp = condense(p);
    for (int s = 0; s < 200; ++s) {
      const Vec x = Vec::NullaryExpr(p.num_states(), [&] { return normal(rng); });
      const Vec U = Vec::NullaryExpr(qp.num_vars(), [&] { return 0.5 * normal(rng); });
      const bool reference = oracle::rollout_feasible(p, x, U);
      EXPECT_EQ(qp.feasible(x, U), reference);
      agree_infeasible += reference ? 0 : 1;
    }
  }
  EXPECT_GT(agree_infeasible, 0);  // both outcomes were exercised
}

TEST(Condense, RowLayoutAndInfiniteBounds) {
  LtiProblem p = identity_problem();
  p.horizon = 2;
  p.u_max(0) = 1.0;
  p.x_min(1) = -2.0;
  const CondensedQp qp = condense(p);
  // Per step: u_0 upper bound, then x_{k+1} lower bound on component 1.
  ASSERT_EQ(qp.num_rows(), 4);
  EXPECT_EQ(qp.rows[0].kind, RowKind::kInputUpper);
  EXPECT_EQ(qp.rows[1].kind, RowKind::kStateLower);
  EXPECT_EQ(qp.rows[1].step, 1);
  EXPECT_EQ(qp.rows[3].step, 2);
  EXPECT_EQ(qp.rows[3].component, 1);
}

TEST(Condense, RejectsIndefiniteInputWeight) {
  LtiProblem p = identity_problem();
  p.Ru(1, 1) = 0.0;
  EXPECT_THROW(condense(p), ConfigError);
}

TEST(Condense, RejectsDimensionMismatch) {
  LtiProblem p = identity_problem();
  p.B = Mat::Identity(3, 2);
  EXPECT_THROW(condense(p), ConfigError);
  LtiProblem q = identity_problem();
  q.u_min(0) = 5.0;
  q.u_max(0) = 1.0;
  EXPECT_THROW(q.validate(), ConfigError);
}

TEST(Dare, SatisfiesRiccatiEquation) {
  const LtiProblem p = fixtures::double_integrator(3, false);
  const Mat P = solve_dare(p.A, p.B, p.Qx, p.Ru);
  const Mat S = p.Ru + p.B.transpose() * P * p.B;
  const Mat residual = p.A.transpose() * P * p.A -
                       p.A.transpose() * P * p.B * S.ldlt().solve(p.B.transpose() * P * p.A) +
                       p.Qx - P;
  EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ProblemText, DefaultsAndRoundTrip) {
  const std::string text = R"({
    "A": [[1, 0.1], [0, 1]], "B": [[0.005], [0.1]],
    "u_min": [-1], "u_max": [1], "x_max": [null, 2.5],
    "horizon": 2, "Qx": [[1, 0], [0, 1]], "Ru": 0.1 })";
  const LtiProblem p = problem_from_text(text);
  EXPECT_FALSE(p.Qf.has_value());
  EXPECT_TRUE(p.terminal_cost().isApprox(p.Qx));
  EXPECT_EQ(p.x_max(0), kInfiniteBound);
  EXPECT_EQ(p.x_max(1), 2.5);
  EXPECT_EQ(p.x_min(1), -kInfiniteBound);
  EXPECT_EQ(p.Ru(0, 0), 0.1);

  const LtiProblem q = problem_from_text(problem_to_text(p));
  EXPECT_EQ(q.A, p.A);
  EXPECT_EQ(q.x_max, p.x_max);
  EXPECT_EQ(q.horizon, 2);

  EXPECT_THROW(problem_from_text(R"({"A": [[1]]})"), ConfigError);
}

TEST(ProblemText, LqrTerminalKeyword) {
  const std::string text = R"({"A": [[1, 0.1], [0, 1]], "B": [[0.005], [0.1]],
    "horizon": 3, "Qx": [[1, 0], [0, 1]], "Ru": [[0.1]], "Qf": "lqr"})";
  const LtiProblem p = problem_from_text(text);
  ASSERT_TRUE(p.Qf.has_value());
  EXPECT_TRUE(p.Qf->isApprox(solve_dare(p.A, p.B, p.Qx, p.Ru), 1e-12));
}
