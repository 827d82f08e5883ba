#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "empcnet/closed_loop.hpp"
#include "empcnet/envs.hpp"
#include "empcnet/mpqp.hpp"
#include "empcnet/rl.hpp"
#include "oracles/oracles.hpp"

using namespace empcnet;
using namespace empcnet::envs;

TEST(DoubleIntegratorPlant, FreeDrift) {
  Plant p = make_double_integrator();
  p.env->set_state((Vec(2) << 1.0, 0.0).finished());
  for (int t = 0; t < 50; ++t) p.env->step(Vec::Zero(1));
  EXPECT_EQ(p.env->state(), (Vec(2) << 1.0, 0.0).finished());
}

TEST(DoubleIntegratorPlant, OneStepArithmetic) {
  Plant p = make_double_integrator();
  p.env->set_state(Vec::Zero(2));
  const StepResult r = p.env->step(Vec::Ones(1));
  EXPECT_NEAR(r.state(0), 0.005, 1e-15);
  EXPECT_NEAR(r.state(1), 0.1, 1e-15);
  EXPECT_NEAR(r.reward, -0.1, 1e-15);  // -(x'Qx + u'Ru) at x = 0, u = 1
  EXPECT_FALSE(r.violated);
}

TEST(DoubleIntegratorPlant, ClosedLoopConverges) {
  Plant p = make_double_integrator();
  const PwaPolicy policy(explore(condense(p.design), p.domain).solution);
  const Controller ctrl = pwa_controller(policy, p.env->input_box());
  for (const Vec& x0 : evaluation_starts(*p.env, 1, 100)) {
    const Trajectory t = rollout(*p.env, x0, ctrl, 200);
    ASSERT_EQ(t.inputs.size(), 200u);
    EXPECT_LE(t.states.back().norm(), 1e-2) << x0.transpose();
    EXPECT_EQ(t.fallback_steps, 0);
  }
}

TEST(PendulumPlant, UprightEquilibriumIsFixed) {
  Plant p = make_pendulum();
  p.env->set_state(Vec::Zero(2));
  for (int t = 0; t < 200; ++t) {
    const StepResult r = p.env->step(Vec::Zero(1));
    EXPECT_EQ(r.reward, 0.0);
  }
  EXPECT_EQ(p.env->state(), Vec::Zero(2));
}

TEST(PendulumPlant, DesignModelIsPlantJacobianWithoutMismatch) {
  Plant p = make_pendulum();
  const Vec u0 = Vec::Zero(1);
  Mat A(2, 2), B(2, 1);
  for (int j = 0; j < 2; ++j) {
    const Vec e = Vec::Unit(2, j);
    A.col(j) = (p.env->dynamics(1e-6 * e, u0) - p.env->dynamics(-1e-6 * e, u0)) / 2e-6;
  }
  B.col(0) = (p.env->dynamics(Vec::Zero(2), Vec::Constant(1, 1e-6)) -
              p.env->dynamics(Vec::Zero(2), Vec::Constant(1, -1e-6))) / 2e-6;
  EXPECT_LT((A - p.design.A).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((B - p.design.B).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PendulumPlant, MismatchScalesDesignInputGain) {
  const Plant exact = make_pendulum();
  const Plant light = make_pendulum({}, MismatchSpec{0.4});
  EXPECT_EQ(light.design.A, exact.design.A);
  EXPECT_NEAR(light.design.B(1, 0), exact.design.B(1, 0) / 0.6, 1e-12);
  EXPECT_THROW(make_pendulum({}, MismatchSpec{1.0}), ConfigError);
  EXPECT_THROW(make_pendulum({}, MismatchSpec{-0.1}), ConfigError);
}

TEST(PendulumPlant, LargerMismatchCostsReward) {
  auto mean_reward = [](double eps) {
    Plant p = make_pendulum({}, MismatchSpec{eps});
    const PwaPolicy policy(explore(condense(p.design), p.domain).solution);
    const auto starts = evaluation_starts(*p.env, 3, 20);
    const auto r = evaluate_controller(*p.env, pwa_controller(policy, p.env->input_box()), starts);
    double sum = 0.0;
    for (double v : r) sum += v;
    return sum / static_cast<double>(r.size());
  };
  EXPECT_LT(mean_reward(0.4), mean_reward(0.0));
}

TEST(PendulumPlant, SubstepHalvingConverges) {
  PendulumParams coarse;
  coarse.substeps = 1;
  PendulumParams fine = coarse;
  fine.substeps = 2;
  const PendulumEnv a(coarse), b(fine);
  // Feedback near the default explicit law, from a corner of the initial box.
  Vec xa = (Vec(2) << 0.2, -0.3).finished();
  Vec xb = xa;
  double worst = 0.0;
  auto law = [](const Vec& x) {
    return Vec::Constant(1, std::clamp(-12.6 * x(0) - 7.9 * x(1), -3.0, 3.0));
  };
  for (int t = 0; t < 200; ++t) {
    xa = a.dynamics(xa, law(xa));
    xb = b.dynamics(xb, law(xb));
    worst = std::max(worst, (xa - xb).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(PendulumPlant, UnforcedEnergyIsConserved) {
  PendulumParams params;
  const PendulumEnv env(params);
  Vec x = (Vec(2) << M_PI - 0.5, 0.0).finished();  // swinging about the bottom
  const double e0 = env.energy(x);
  double worst = 0.0;
  for (int t = 0; t < params.episode_length; ++t) {
    x = env.dynamics(x, Vec::Zero(1));
    worst = std::max(worst, std::abs(env.energy(x) - e0) / std::abs(e0));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(PendulumPlant, RewardIsDeterministicAndSafetyTerminates) {
  Plant p = make_pendulum();
  const Vec x = (Vec(2) << 0.1, -0.4).finished();
  const Vec u = Vec::Constant(1, 0.7);
  EXPECT_EQ(p.env->reward(x, u), p.env->reward(x, u));
  EXPECT_NEAR(p.env->reward(x, u), -(0.01 + 0.1 * 0.16 + 0.001 * 0.49), 1e-15);
  p.env->set_state((Vec(2) << 0.99, 2.0).finished());
  bool violated = false;
  for (int t = 0; t < 20 && !violated; ++t) violated = p.env->step(Vec::Constant(1, 3.0)).violated;
  EXPECT_TRUE(violated);
}

TEST(PendulumPlant, InitialStatesInBox) {
  const Plant p = make_pendulum();
  auto rng = rl::make_stream(1, 0);
  for (int i = 0; i < 100; ++i) {
    const Vec x = p.env->sample_initial_state(rng);
    EXPECT_LE(std::abs(x(0)), 0.2);
    EXPECT_LE(std::abs(x(1)), 0.3);
  }
}

TEST(Rk4Discretize, MatchesMatrixExponentialSeries) {
  Mat Ac(2, 2);
  Ac << 0, 1, -2, -0.3;
  const Mat Bc = (Mat(2, 1) << 0, 1).finished();
  const double dt = 0.01;
  const Discretized d = rk4_discretize(Ac, Bc, dt, 1);
  // Exact ZOH by series: A = sum (Ac dt)^k / k!, B = sum Ac^k dt^(k+1)/(k+1)! Bc.
  Mat A = Mat::Identity(2, 2), B = Mat::Zero(2, 1), term = Mat::Identity(2, 2);
  double fact = 1.0;
  for (int k = 1; k < 20; ++k) {
    B += term * Bc * std::pow(dt, k) / (fact * k);
    fact *= k;
    term = term * Ac;
    A += term * std::pow(dt, k) / fact;
  }
  EXPECT_LT((d.A - A).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((d.B - B).cwiseAbs().maxCoeff(), 1e-9);
}
