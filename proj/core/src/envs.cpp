#include "empcnet/envs.hpp"

#include <cmath>

namespace empcnet::envs {
namespace {

Vec uniform_in(const DomainBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(box.dim());
  for (int i = 0; i < box.dim(); ++i) {
    x(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
  }
  return x;
}

DomainBox symmetric_box(const Vec& half_width) { return {-half_width, half_width}; }

}  // namespace

Vec Env::reset(std::mt19937_64& rng) {
  state_ = sample_initial_state(rng);
  return state_;
}

StepResult Env::step(const Vec& u) {
  StepResult out;
  out.reward = reward(state_, u);
  out.state = dynamics(state_, u);
  out.violated = !out.state.allFinite() || !safe_box_.contains(out.state);
  state_ = out.state;
  return out;
}

LinearEnv::LinearEnv(Mat A, Mat B, Mat Qx, Mat Ru, DomainBox initial_box, DomainBox input_box,
                     DomainBox safe_box, int episode_length)
    : Env(std::move(input_box), std::move(safe_box), episode_length),
      A_(std::move(A)),
      B_(std::move(B)),
      Qx_(std::move(Qx)),
      Ru_(std::move(Ru)),
      initial_box_(std::move(initial_box)) {}

Vec LinearEnv::sample_initial_state(std::mt19937_64& rng) const {
  return uniform_in(initial_box_, rng);
}

double LinearEnv::reward(const Vec& x, const Vec& u) const {
  return -(x.dot(Qx_ * x) + u.dot(Ru_ * u));
}

void MismatchSpec::validate() const {
  if (!(mass_error >= 0.0 && mass_error < 1.0)) {
    throw ConfigError("mass error must lie in [0, 1)");
  }
}

PendulumEnv::PendulumEnv(PendulumParams params)
    : Env(symmetric_box(Vec::Constant(1, params.torque_max)),
          symmetric_box(Eigen::Vector2d(params.safe_angle, params.safe_rate)),
          params.episode_length),
      params_(std::move(params)) {
  if (params_.dt <= 0.0 || params_.substeps < 1 || params_.mass <= 0.0 || params_.length <= 0.0) {
    throw ConfigError("pendulum requires positive dt, mass, length and substeps");
  }
}

Vec PendulumEnv::sample_initial_state(std::mt19937_64& rng) const {
  return uniform_in(symmetric_box(Eigen::Vector2d(params_.initial_angle, params_.initial_rate)),
                    rng);
}

Vec PendulumEnv::derivative(const Vec& x, double u) const {
  const double l = params_.length;
  Vec dx(2);
  dx << x(1), params_.gravity / l * std::sin(x(0)) + u / (params_.mass * l * l);
  return dx;
}

Vec PendulumEnv::dynamics(const Vec& x, const Vec& u) const {
  const double h = params_.dt / params_.substeps;
  Vec s = x;
  for (int i = 0; i < params_.substeps; ++i) {
    const Vec k1 = derivative(s, u(0));
    const Vec k2 = derivative(s + 0.5 * h * k1, u(0));
    const Vec k3 = derivative(s + 0.5 * h * k2, u(0));
    const Vec k4 = derivative(s + h * k3, u(0));
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

double PendulumEnv::reward(const Vec& x, const Vec& u) const {
  return -(params_.angle_weight * x(0) * x(0) + params_.rate_weight * x(1) * x(1) +
           params_.torque_weight * u(0) * u(0));
}

double PendulumEnv::energy(const Vec& x) const {
  const double m = params_.mass;
  const double l = params_.length;
  return 0.5 * m * l * l * x(1) * x(1) + m * params_.gravity * l * std::cos(x(0));
}

Discretized rk4_discretize(const Mat& Ac, const Mat& Bc, double dt, int substeps) {
  const auto n = Ac.rows();
  const double h = dt / substeps;
  const Mat hA = h * Ac;
  const Mat I = Mat::Identity(n, n);
  const Mat hA2 = hA * hA;
  const Mat hA3 = hA2 * hA;
  const Mat step_A = I + hA + hA2 / 2.0 + hA3 / 6.0 + hA3 * hA / 24.0;
  const Mat step_B = h * (I + hA / 2.0 + hA2 / 6.0 + hA3 / 24.0) * Bc;
  Discretized d{I, Mat::Zero(n, Bc.cols())};
  for (int i = 0; i < substeps; ++i) {
    d.B = step_A * d.B + step_B;
    d.A = step_A * d.A;
  }
  return d;
}

Plant make_double_integrator(const DoubleIntegratorParams& p) {
  if (p.dt <= 0.0) throw ConfigError("double integrator requires dt > 0");
  Mat A(2, 2);
  A << 1.0, p.dt, 0.0, 1.0;
  Mat B(2, 1);
  B << 0.5 * p.dt * p.dt, p.dt;

  LtiProblem design;
  design.A = A;
  design.B = B;
  design.C = Mat::Identity(2, 2);
  design.x_min = Vec::Constant(2, -kInfiniteBound);
  design.x_max = Vec::Constant(2, kInfiniteBound);
  design.u_min = Vec::Constant(1, -p.u_max);
  design.u_max = Vec::Constant(1, p.u_max);
  design.horizon = p.horizon;
  design.Qx = p.Qx;
  design.Ru = p.Ru;
  if (p.lqr_terminal) design.Qf = solve_dare(A, B, p.Qx, p.Ru);
  design.validate();

  Plant plant;
  plant.env = std::make_unique<LinearEnv>(A, B, p.Qx, p.Ru, p.initial,
                                          symmetric_box(Vec::Constant(1, p.u_max)), p.safe,
                                          p.episode_length);
  plant.design = std::move(design);
  plant.domain = p.domain;
  return plant;
}

Plant make_pendulum(const PendulumParams& p, const MismatchSpec& mismatch) {
  mismatch.validate();
  auto env = std::make_unique<PendulumEnv>(p);
  const double design_mass = (1.0 - mismatch.mass_error) * p.mass;
  const double l = p.length;
  Mat Ac(2, 2);
  Ac << 0.0, 1.0, p.gravity / l, 0.0;
  Mat Bc(2, 1);
  Bc << 0.0, 1.0 / (design_mass * l * l);
  const Discretized d = rk4_discretize(Ac, Bc, p.dt, p.substeps);

  LtiProblem design;
  design.A = d.A;
  design.B = d.B;
  design.C = Mat::Identity(2, 2);
  design.x_min = Vec::Constant(2, -kInfiniteBound);
  design.x_max = Vec::Constant(2, kInfiniteBound);
  design.u_min = Vec::Constant(1, -p.torque_max);
  design.u_max = Vec::Constant(1, p.torque_max);
  design.horizon = p.horizon;
  design.Qx = Eigen::Vector2d(p.angle_weight, p.rate_weight).asDiagonal();
  design.Ru = Mat::Constant(1, 1, p.torque_weight);
  if (p.lqr_terminal) design.Qf = solve_dare(design.A, design.B, design.Qx, design.Ru);
  design.validate();

  Plant plant;
  plant.env = std::move(env);
  plant.design = std::move(design);
  plant.domain = p.domain;
  return plant;
}

Plant make_linear(const LtiProblem& problem, const DomainBox& domain, const DomainBox& initial,
                  int episode_length) {
  problem.validate();
  Vec safe_lo = problem.x_min.cwiseMax(-kInfiniteBound);
  Vec safe_hi = problem.x_max.cwiseMin(kInfiniteBound);
  Plant plant;
  plant.env = std::make_unique<LinearEnv>(problem.A, problem.B, problem.Qx, problem.Ru, initial,
                                          DomainBox{problem.u_min, problem.u_max},
                                          DomainBox{safe_lo, safe_hi}, episode_length);
  plant.design = problem;
  plant.domain = domain;
  return plant;
}

}  // namespace empcnet::envs
