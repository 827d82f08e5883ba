#include "empcnet/closed_loop.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "empcnet/rl.hpp"

namespace empcnet {
namespace {

constexpr std::uint64_t kEvalStream = 5;

}  // namespace

Controller pwa_controller(const PwaPolicy& policy, const DomainBox& input_box) {
  return [&policy, input_box](const Vec& x) {
    ControlAction a;
    const Located loc = policy.locate_with_fallback(x);
    if (loc.index == kOutside) throw NumericError("cannot locate a non-finite state");
    a.region = loc.index;
    a.fallback = loc.clipped;
    a.u = input_box.clip(policy.first_input(loc.index, loc.point));
    return a;
  };
}

Controller network_controller(const EncodedNetwork& network, const DomainBox& input_box) {
  return [&network, input_box](const Vec& x) {
    ControlAction a;
    const RoutedWithFallback r = route_with_fallback(network, x);
    if (!r.routed) throw NumericError("cannot route a non-finite state");
    a.region = r.routed->index;
    a.fallback = r.clipped;
    a.u = input_box.clip(r.routed->u);
    return a;
  };
}

Trajectory rollout(envs::Env& env, const Vec& x0, const Controller& controller, int steps) {
  Trajectory traj;
  env.set_state(x0);
  traj.states.push_back(x0);
  Vec x = x0;
  for (int t = 0; t < steps; ++t) {
    const ControlAction a = controller(x);
    const envs::StepResult s = env.step(a.u);
    if (!s.state.allFinite() || !std::isfinite(s.reward)) {
      traj.aborted = true;
      break;
    }
    traj.inputs.push_back(a.u);
    traj.regions.push_back(a.region);
    traj.rewards.push_back(s.reward);
    traj.states.push_back(s.state);
    traj.cumulative_reward += s.reward;
    traj.fallback_steps += a.fallback ? 1 : 0;
    x = s.state;
    if (s.violated) {
      traj.violated = true;
      break;
    }
  }
  return traj;
}

std::vector<Vec> evaluation_starts(const envs::Env& env, std::uint64_t seed, int episodes) {
  auto rng = rl::make_stream(seed, kEvalStream);
  std::vector<Vec> starts;
  for (int e = 0; e < episodes; ++e) starts.push_back(env.sample_initial_state(rng));
  return starts;
}

std::vector<double> evaluate_controller(envs::Env& env, const Controller& controller,
                                        const std::vector<Vec>& starts) {
  std::vector<double> out;
  out.reserve(starts.size());
  for (const Vec& x0 : starts) {
    out.push_back(rollout(env, x0, controller, env.episode_length()).cumulative_reward);
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
  std::ostringstream os;
  const auto n = trajectory.states.empty() ? 0 : trajectory.states[0].size();
  const auto m = trajectory.inputs.empty() ? 0 : trajectory.inputs[0].size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
  for (Eigen::Index j = 0; j < m; ++j) os << ",u" << (j + 1);
  os << ",r\n" << std::setprecision(17);
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    os << t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << trajectory.states[t](i);
    if (t < trajectory.inputs.size()) {
      for (Eigen::Index j = 0; j < m; ++j) os << ',' << trajectory.inputs[t](j);
      os << ',' << trajectory.rewards[t];
    } else {
      for (Eigen::Index j = 0; j < m; ++j) os << ',';
      os << ',';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace empcnet
