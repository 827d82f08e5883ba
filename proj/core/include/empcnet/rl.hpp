#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "empcnet/envs.hpp"
#include "empcnet/mlp.hpp"
#include "empcnet/netenc.hpp"

namespace empcnet::rl {

struct Transition {
  Vec x;
  Vec u;
  double reward = 0.0;
  Vec x_next;
  bool done = false;  // safety violation only; time limits still bootstrap
};

// Fixed-capacity FIFO ring serving one policy subnet.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, RegionIndex region);

  void push(Transition t);
  void clear();
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  RegionIndex region() const { return region_; }
  // i = 0 is the oldest stored transition.
  const Transition& operator[](std::size_t i) const;
  // Uniform with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  RegionIndex region_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // next write slot once full
  std::size_t size_ = 0;
};

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double kl_weight = 1.0;  // lambda
  int episodes = 200;      // M
  int steps = 200;         // T
  int batch = 32;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;
  std::size_t buffer_capacity = 100000;
  std::vector<int> critic_hidden{64, 64};
  Optimizer optimizer = Optimizer::kSgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::vector<int> disabled_buffers;  // 1-based; ablated buffers never fill
  bool update_networks = true;        // false: roll out only
  std::size_t min_buffer_fill = 0;    // updates need max(batch, this) stored transitions
  int actor_warmup_episodes = 0;      // critic-only updates before this episode
  double reward_scale = 1.0;          // applied to rewards in the critic targets
  bool log_wall_time = false;

  void validate() const;
};

// Column-per-sample views of a sampled minibatch.
struct Minibatch {
  Mat x;
  Mat u;
  Vec reward;
  Mat x_next;
  Vec not_done;  // 1 - done
};

struct ActResult {
  Vec u;
  RegionIndex region = kOutside;
  bool fallback = false;
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;
};

// Independent deterministic stream `stream` derived from `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

class AdamState {
 public:
  void step(Vec& params, const Vec& grad, double lr, const TrainConfig& cfg);

 private:
  Vec m_;
  Vec v_;
  long t_ = 0;
};

// Learner for the routed network: one shared critic, one actor and one
// replay buffer per region, and target copies of the critic and actors.
// The location network is never modified.
class Learner {
 public:
  Learner(EncodedNetwork network, DomainBox action_box, TrainConfig config);

  const TrainConfig& config() const { return config_; }
  const EncodedNetwork& network() const { return live_; }
  const EncodedNetwork& target_network() const { return target_; }
  const std::vector<PolicySubnet>& old_subnets() const { return old_; }
  const Mlp& critic() const { return critic_; }
  Mlp& critic() { return critic_; }
  const Mlp& target_critic() const { return target_critic_; }
  Mlp& target_critic() { return target_critic_; }
  PolicySubnet& subnet(RegionIndex i) { return live_.subnets.at(static_cast<std::size_t>(i - 1)); }
  const std::vector<ReplayBuffer>& buffers() const { return buffers_; }
  std::size_t dropped() const { return dropped_; }
  const DomainBox& action_box() const { return action_box_; }

  // Routed action plus Gaussian exploration noise, clipped to the box.
  ActResult act(const Vec& x);
  // Noise-free routed action, clipped to the box.
  ActResult act_greedy(const Vec& x) const;

  // Appends to the buffer of the region containing x; returns false (and
  // counts a drop) if x lies in no region or the buffer is ablated.
  bool store(Transition t);

  Minibatch sample(RegionIndex i);
  bool ready(RegionIndex i) const;

  // Single gradient steps; both return the loss before the step.
  double critic_update(RegionIndex i, const Minibatch& batch);
  double actor_update(RegionIndex i, const Minibatch& batch);
  // Every target parameter <- tau * live + (1 - tau) * target.
  void soft_update();
  // Freezes the proximal anchor used by the actor penalty.
  void snapshot_old_policies();

  struct SweepStats {
    double critic_loss_sum = 0.0;
    double actor_loss_sum = 0.0;
    int updates = 0;
  };
  // One pass over every region with a full enough buffer. Actor steps are
  // skipped when `update_actors` is false.
  SweepStats learn_sweep(bool update_actors = true);

  // Bellman targets s*r + gamma * Qbar(x', clip(pibar(x'))).
  Vec critic_targets(RegionIndex i, const Minibatch& batch) const;
  // Mean squared Bellman error and its gradient in critic parameters.
  LossGrad critic_loss(const Minibatch& batch, const Vec& targets) const;
  // -mean Q(x, pi_i(x)) + lambda * mean |pi_i(x) - pi_i_old(x)|^2 and its
  // gradient in [vec(W); b] of subnet i.
  LossGrad actor_loss(RegionIndex i, const Minibatch& batch) const;

  static Vec flatten(const PolicySubnet& s);
  static void unflatten(const Vec& theta, PolicySubnet& s);

 private:
  Vec target_action(RegionIndex fallback_region, const Vec& x) const;
  void apply(Vec& params, const Vec& grad, double lr, AdamState& state);

  EncodedNetwork live_;
  EncodedNetwork target_;
  std::vector<PolicySubnet> old_;
  Mlp critic_;
  Mlp target_critic_;
  DomainBox action_box_;
  TrainConfig config_;
  std::vector<ReplayBuffer> buffers_;
  std::vector<char> disabled_;
  std::size_t dropped_ = 0;
  std::mt19937_64 noise_rng_;
  std::mt19937_64 sample_rng_;
  AdamState critic_adam_;
  std::vector<AdamState> actor_adam_;
};

struct EpisodeRecord {
  int episode = 0;
  double cumulative_reward = 0.0;
  int steps = 0;
  std::vector<std::size_t> buffer_sizes;
  double critic_loss_mean = 0.0;
  double actor_loss_mean = 0.0;
  std::size_t dropped = 0;  // cumulative
  int fallback_steps = 0;
  bool aborted = false;     // non-finite state
  bool violated = false;    // left the safe box
  double wall_time = 0.0;   // seconds since training start
};

struct TrainingLog {
  std::vector<EpisodeRecord> episodes;
};

// Full training loop: per step act, env step, store, learn sweep, soft update.
TrainingLog train(Learner& learner, envs::Env& env);

struct CsvHeader {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string source_hash;
};

// First line: "# seed=... config_digest=... source_hash=... version=...".
std::string to_csv(const TrainingLog& log, const CsvHeader& header, bool wall_time);

}  // namespace empcnet::rl
