#pragma once

#include <random>

#include "empcnet/envs.hpp"
#include "empcnet/lti.hpp"
#include "empcnet/mpqp.hpp"

namespace fixtures {

using empcnet::DomainBox;
using empcnet::LtiProblem;
using empcnet::Mat;
using empcnet::Vec;

inline LtiProblem double_integrator(int horizon, bool lqr_terminal = true) {
  empcnet::envs::DoubleIntegratorParams p;
  p.horizon = horizon;
  p.lqr_terminal = lqr_terminal;
  return empcnet::envs::make_double_integrator(p).design;
}

inline DomainBox double_integrator_domain() {
  return empcnet::envs::DoubleIntegratorParams{}.domain;
}

// Random stable-ish system with state and input boxes.
inline LtiProblem random_problem(std::mt19937_64& rng, int n, int m, int horizon) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LtiProblem p;
  p.A = Mat::Identity(n, n) + 0.2 * Mat::NullaryExpr(n, n, [&] { return normal(rng); });
  p.B = Mat::NullaryExpr(n, m, [&] { return normal(rng); });
  p.C = Mat::Identity(n, n);
  p.x_min = Vec::Constant(n, -3.0);
  p.x_max = Vec::Constant(n, 4.0);
  p.u_min = Vec::Constant(m, -1.0);
  p.u_max = Vec::Constant(m, 0.5);
  p.horizon = horizon;
  const Mat Lq = Mat::NullaryExpr(n, n, [&] { return normal(rng); });
  p.Qx = Lq * Lq.transpose();
  const Mat Lr = Mat::NullaryExpr(m, m, [&] { return normal(rng); });
  p.Ru = Lr * Lr.transpose() + Mat::Identity(m, m);
  const Mat Lf = Mat::NullaryExpr(n, n, [&] { return normal(rng); });
  p.Qf = Mat(Lf * Lf.transpose());
  return p;
}

inline Vec uniform_in(const DomainBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
  return x;
}

}  // namespace fixtures
