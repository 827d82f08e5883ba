#pragma once

#include <memory>
#include <random>

#include "empcnet/lti.hpp"
#include "empcnet/polyhedron.hpp"

namespace empcnet::envs {

struct StepResult {
  Vec state;
  double reward = 0.0;
  bool violated = false;  // left the safe box: terminal for bootstrapping
};

// Simulated plant with a quadratic-type reward and a safety box.
class Env {
 public:
  virtual ~Env() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual Vec sample_initial_state(std::mt19937_64& rng) const = 0;
  // One control period with u held constant.
  virtual Vec dynamics(const Vec& x, const Vec& u) const = 0;
  virtual double reward(const Vec& x, const Vec& u) const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  const DomainBox& input_box() const { return input_box_; }
  const DomainBox& safe_box() const { return safe_box_; }
  int episode_length() const { return episode_length_; }

  Vec reset(std::mt19937_64& rng);
  void set_state(Vec x) { state_ = std::move(x); }
  const Vec& state() const { return state_; }
  // Reward is r(x_t, u_t); the state advances to x_{t+1}.
  StepResult step(const Vec& u);

 protected:
  Env(DomainBox input_box, DomainBox safe_box, int episode_length)
      : input_box_(std::move(input_box)),
        safe_box_(std::move(safe_box)),
        episode_length_(episode_length) {}

 private:
  DomainBox input_box_;
  DomainBox safe_box_;
  int episode_length_;
  Vec state_;
};

// x+ = A x + B u with reward -(x'Qx x + u'Ru u).
class LinearEnv final : public Env {
 public:
  LinearEnv(Mat A, Mat B, Mat Qx, Mat Ru, DomainBox initial_box, DomainBox input_box,
            DomainBox safe_box, int episode_length);

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int input_dim() const override { return static_cast<int>(B_.cols()); }
  Vec sample_initial_state(std::mt19937_64& rng) const override;
  Vec dynamics(const Vec& x, const Vec& u) const override { return A_ * x + B_ * u; }
  double reward(const Vec& x, const Vec& u) const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<LinearEnv>(*this); }

 private:
  Mat A_, B_, Qx_, Ru_;
  DomainBox initial_box_;
};

// Relative mass error of the design model: m_design = (1 - eps) m_true.
struct MismatchSpec {
  double mass_error = 0.0;
  void validate() const;
};

struct PendulumParams {
  double gravity = 10.0;
  double length = 1.0;
  double mass = 1.0;   // true plant mass
  double dt = 0.05;
  int substeps = 1;    // RK4 substeps per control period
  double torque_max = 3.0;
  double initial_angle = 0.2;  // uniform in +-
  double initial_rate = 0.3;
  double safe_angle = 1.0;
  double safe_rate = 8.0;
  double angle_weight = 1.0;
  double rate_weight = 0.1;
  double torque_weight = 0.001;
  int episode_length = 200;
  int horizon = 3;
  bool lqr_terminal = false;  // true: Qf from the DARE instead of Qx
  DomainBox domain{Eigen::Vector2d(-0.6, -3.0), Eigen::Vector2d(0.6, 3.0)};
};

// Inverted pendulum, angle 0 upright:
//   theta'' = (g/l) sin(theta) + u / (m l^2).
class PendulumEnv final : public Env {
 public:
  explicit PendulumEnv(PendulumParams params);

  int state_dim() const override { return 2; }
  int input_dim() const override { return 1; }
  Vec sample_initial_state(std::mt19937_64& rng) const override;
  Vec dynamics(const Vec& x, const Vec& u) const override;
  double reward(const Vec& x, const Vec& u) const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PendulumEnv>(*this); }

  double energy(const Vec& x) const;
  const PendulumParams& params() const { return params_; }

 private:
  Vec derivative(const Vec& x, double u) const;
  PendulumParams params_;
};

struct DoubleIntegratorParams {
  double dt = 0.1;
  double u_max = 1.0;
  Mat Qx = Mat::Identity(2, 2);
  Mat Ru = Mat::Constant(1, 1, 0.1);
  int horizon = 3;
  bool lqr_terminal = true;  // Qf from the DARE; Qx is too slow to settle at N = 3
  int episode_length = 200;
  DomainBox initial{Eigen::Vector2d(-2.0, -1.0), Eigen::Vector2d(2.0, 1.0)};
  DomainBox domain{Eigen::Vector2d(-5.0, -3.0), Eigen::Vector2d(5.0, 3.0)};
  DomainBox safe{Eigen::Vector2d(-50.0, -50.0), Eigen::Vector2d(50.0, 50.0)};
};

// An environment together with the model used to design its controller and
// the box over which the explicit law is computed.
struct Plant {
  std::unique_ptr<Env> env;
  LtiProblem design;
  DomainBox domain;
};

// A = [[1, dt], [0, 1]], B = [[dt^2/2], [dt]]; plant equals design model.
Plant make_double_integrator(const DoubleIntegratorParams& params = {});

// Nonlinear RK4 plant with the true mass; design model is the RK4
// discretization of the upright linearization with the mismatched mass,
// which equals the Jacobian of the plant step at the origin when eps = 0.
Plant make_pendulum(const PendulumParams& params = {}, const MismatchSpec& mismatch = {});

// Generic linear plant whose reward mirrors the problem's stage cost.
Plant make_linear(const LtiProblem& problem, const DomainBox& domain, const DomainBox& initial,
                  int episode_length);

// Exact zero-order-hold RK4 discretization of x' = Ac x + Bc u.
struct Discretized {
  Mat A;
  Mat B;
};
Discretized rk4_discretize(const Mat& Ac, const Mat& Bc, double dt, int substeps);

}  // namespace empcnet::envs
