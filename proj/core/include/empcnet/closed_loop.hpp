#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "empcnet/envs.hpp"
#include "empcnet/netenc.hpp"
#include "empcnet/pwa.hpp"

namespace empcnet {

struct ControlAction {
  Vec u;
  RegionIndex region = kOutside;
  bool fallback = false;
};

using Controller = std::function<ControlAction(const Vec&)>;

// Explicit law: locate (with fallback), first input, clipped to the box.
Controller pwa_controller(const PwaPolicy& policy, const DomainBox& input_box);
// Encoded network: route (with fallback), clipped to the box.
Controller network_controller(const EncodedNetwork& network, const DomainBox& input_box);

struct Trajectory {
  std::vector<Vec> states;   // x_0 .. x_T (one more than inputs)
  std::vector<Vec> inputs;
  std::vector<double> rewards;
  std::vector<RegionIndex> regions;
  double cumulative_reward = 0.0;
  int fallback_steps = 0;
  bool violated = false;
  bool aborted = false;  // non-finite state or input
};

// Runs up to `steps` steps from x0, stopping early on a safety violation.
// The environment is left in the final state.
Trajectory rollout(envs::Env& env, const Vec& x0, const Controller& controller, int steps);

// Initial states for noise-free evaluation episodes, drawn from a stream of
// `seed` that is independent of the training streams.
std::vector<Vec> evaluation_starts(const envs::Env& env, std::uint64_t seed, int episodes);

// Cumulative reward of one rollout per start state, each of the env's
// episode length.
std::vector<double> evaluate_controller(envs::Env& env, const Controller& controller,
                                        const std::vector<Vec>& starts);

// Columns t, x1..xn, u1..um, r; the final state row has empty u and r.
std::string trajectory_to_csv(const Trajectory& trajectory);

}  // namespace empcnet
