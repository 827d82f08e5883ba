#include "empcnet/rl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "empcnet/serialize.hpp"

namespace empcnet::rl {
namespace {

enum Stream : std::uint64_t { kCriticInit = 1, kNoise = 2, kSampling = 3, kEnv = 4 };

const Routed& require_routed(const RoutedWithFallback& r) {
  if (!r.routed) throw NumericError("cannot route a non-finite state");
  return *r.routed;
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

// ------------------------------------------------------------------ buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, RegionIndex region)
    : capacity_(capacity), region_(region) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (size_ < capacity_) {
    data_.push_back(std::move(t));
    ++size_;
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

void ReplayBuffer::clear() {
  data_.clear();
  head_ = 0;
  size_ = 0;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  return data_.at((head_ + i) % size_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch,
                                                      std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> out(batch);
  for (auto& i : out) i = pick(rng);
  return out;
}

// ------------------------------------------------------------------ config

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid training config: ") + what);
  };
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
  require(kl_weight >= 0.0, "kl_weight must be >= 0");
  require(episodes >= 0 && steps >= 1, "episodes >= 0 and steps >= 1 required");
  require(batch >= 1, "batch must be >= 1");
  require(lr_actor >= 0.0 && lr_critic >= 0.0, "learning rates must be >= 0");
  require(noise_scale >= 0.0, "noise_scale must be >= 0");
  require(buffer_capacity >= 1, "buffer_capacity must be >= 1");
  require(!critic_hidden.empty(), "critic needs at least one hidden layer");
  require(actor_warmup_episodes >= 0, "actor_warmup_episodes must be >= 0");
  require(reward_scale > 0.0, "reward_scale must be > 0");
}

void AdamState::step(Vec& params, const Vec& grad, double lr, const TrainConfig& cfg) {
  if (m_.size() != params.size()) {
    m_ = Vec::Zero(params.size());
    v_ = Vec::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = cfg.adam_beta1 * m_ + (1.0 - cfg.adam_beta1) * grad;
  v_ = cfg.adam_beta2 * v_ + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg.adam_epsilon);
}

// ----------------------------------------------------------------- learner

Learner::Learner(EncodedNetwork network, DomainBox action_box, TrainConfig config)
    : live_(std::move(network)),
      action_box_(std::move(action_box)),
      config_(std::move(config)),
      noise_rng_(make_stream(config_.seed, kNoise)),
      sample_rng_(make_stream(config_.seed, kSampling)) {
  config_.validate();
  if (live_.num_regions() == 0) throw ConfigError("network has no regions");
  if (action_box_.dim() != live_.num_inputs()) throw ConfigError("action box dimension mismatch");

  std::vector<int> sizes{live_.num_states() + live_.num_inputs()};
  sizes.insert(sizes.end(), config_.critic_hidden.begin(), config_.critic_hidden.end());
  sizes.push_back(1);
  auto init_rng = make_stream(config_.seed, kCriticInit);
  critic_ = Mlp::random(sizes, init_rng);
  target_critic_ = critic_;
  target_ = live_;
  old_ = live_.subnets;

  disabled_.assign(static_cast<std::size_t>(live_.num_regions()), 0);
  for (int j : config_.disabled_buffers) {
    if (j < 1 || j > live_.num_regions()) throw ConfigError("disabled buffer index out of range");
    disabled_[static_cast<std::size_t>(j - 1)] = 1;
  }
  for (int i = 1; i <= live_.num_regions(); ++i) buffers_.emplace_back(config_.buffer_capacity, i);
  actor_adam_.resize(static_cast<std::size_t>(live_.num_regions()));
}

ActResult Learner::act_greedy(const Vec& x) const {
  ActResult out;
  const RoutedWithFallback r = route_with_fallback(live_, x);
  const Routed& routed = require_routed(r);
  out.fallback = r.clipped;
  out.region = routed.index;
  out.u = action_box_.clip(routed.u);
  return out;
}

ActResult Learner::act(const Vec& x) {
  const RoutedWithFallback r = route_with_fallback(live_, x);
  ActResult out;
  const Routed& routed = require_routed(r);
  out.fallback = r.clipped;
  out.region = routed.index;
  Vec u = routed.u;
  if (config_.noise_scale > 0.0) {
    std::normal_distribution<double> noise(0.0, config_.noise_scale);
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) += noise(noise_rng_);
  }
  out.u = action_box_.clip(u);
  return out;
}

bool Learner::store(Transition t) {
  const auto routed = route(live_, t.x);
  if (!routed || disabled_[static_cast<std::size_t>(routed->index - 1)]) {
    ++dropped_;
    return false;
  }
  buffers_[static_cast<std::size_t>(routed->index - 1)].push(std::move(t));
  return true;
}

bool Learner::ready(RegionIndex i) const {
  const auto idx = static_cast<std::size_t>(i - 1);
  const std::size_t need = std::max(static_cast<std::size_t>(config_.batch), config_.min_buffer_fill);
  return !disabled_[idx] && buffers_[idx].size() >= need;
}

Minibatch Learner::sample(RegionIndex i) {
  const ReplayBuffer& buf = buffers_.at(static_cast<std::size_t>(i - 1));
  if (buf.size() == 0) throw ConfigError("cannot sample an empty replay buffer");
  const auto idx = buf.sample_indices(static_cast<std::size_t>(config_.batch), sample_rng_);
  const auto B = static_cast<Eigen::Index>(idx.size());
  const Transition& first = buf[idx[0]];
  Minibatch mb;
  mb.x.resize(first.x.size(), B);
  mb.u.resize(first.u.size(), B);
  mb.x_next.resize(first.x.size(), B);
  mb.reward.resize(B);
  mb.not_done.resize(B);
  for (Eigen::Index k = 0; k < B; ++k) {
    const Transition& t = buf[idx[static_cast<std::size_t>(k)]];
    mb.x.col(k) = t.x;
    mb.u.col(k) = t.u;
    mb.x_next.col(k) = t.x_next;
    mb.reward(k) = t.reward;
    mb.not_done(k) = t.done ? 0.0 : 1.0;
  }
  return mb;
}

Vec Learner::target_action(RegionIndex fallback_region, const Vec& x) const {
  const RoutedWithFallback r = route_with_fallback(target_, x);
  if (r.routed) return action_box_.clip(r.routed->u);
  const auto& s = target_.subnets[static_cast<std::size_t>(fallback_region - 1)];
  return action_box_.clip(s(x));
}

Vec Learner::critic_targets(RegionIndex i, const Minibatch& batch) const {
  const auto B = batch.x.cols();
  const auto n = batch.x.rows();
  const auto m = batch.u.rows();
  Mat inputs(n + m, B);
  for (Eigen::Index k = 0; k < B; ++k) {
    inputs.col(k).head(n) = batch.x_next.col(k);
    inputs.col(k).tail(m) = target_action(i, batch.x_next.col(k));
  }
  const Vec q_next = target_critic_.forward(inputs);
  return config_.reward_scale * batch.reward + config_.gamma * batch.not_done.cwiseProduct(q_next);
}

LossGrad Learner::critic_loss(const Minibatch& batch, const Vec& targets) const {
  const auto B = batch.x.cols();
  Mat inputs(batch.x.rows() + batch.u.rows(), B);
  inputs.topRows(batch.x.rows()) = batch.x;
  inputs.bottomRows(batch.u.rows()) = batch.u;
  const Mlp::Tape tape = critic_.record(inputs);
  const Vec err = targets - tape.output();
  LossGrad out;
  out.loss = err.squaredNorm() / static_cast<double>(B);
  const Vec dq = -2.0 / static_cast<double>(B) * err;
  out.grad = critic_.backward(tape, dq).parameters;
  return out;
}

Vec Learner::flatten(const PolicySubnet& s) {
  Vec theta(s.W.size() + s.b.size());
  theta.head(s.W.size()) = Eigen::Map<const Vec>(s.W.data(), s.W.size());
  theta.tail(s.b.size()) = s.b;
  return theta;
}

void Learner::unflatten(const Vec& theta, PolicySubnet& s) {
  Eigen::Map<Vec>(s.W.data(), s.W.size()) = theta.head(s.W.size());
  s.b = theta.tail(s.b.size());
}

LossGrad Learner::actor_loss(RegionIndex i, const Minibatch& batch) const {
  const PolicySubnet& actor = live_.subnets.at(static_cast<std::size_t>(i - 1));
  const PolicySubnet& anchor = old_.at(static_cast<std::size_t>(i - 1));
  const auto B = batch.x.cols();
  const auto n = batch.x.rows();
  const auto m = actor.W.rows();
  const double inv_b = 1.0 / static_cast<double>(B);

  Mat inputs(n + m, B);
  Mat displacement(m, B);
  for (Eigen::Index k = 0; k < B; ++k) {
    const Vec u = actor(batch.x.col(k));
    inputs.col(k).head(n) = batch.x.col(k);
    inputs.col(k).tail(m) = u;
    displacement.col(k) = u - anchor(batch.x.col(k));
  }
  const Mlp::Tape tape = critic_.record(inputs);
  const Vec q = tape.output();
  const Mlp::Gradients cg = critic_.backward(tape, Vec::Constant(B, 1.0));
  const Mat dq_du = cg.inputs.bottomRows(m);

  LossGrad out;
  out.loss = -q.mean() + config_.kl_weight * displacement.colwise().squaredNorm().mean();
  // dL/du per sample.
  const Mat dl_du = inv_b * (-dq_du + 2.0 * config_.kl_weight * displacement);
  const Mat dW = dl_du * batch.x.transpose();
  const Vec db = dl_du.rowwise().sum();
  out.grad.resize(dW.size() + db.size());
  out.grad.head(dW.size()) = Eigen::Map<const Vec>(dW.data(), dW.size());
  out.grad.tail(db.size()) = db;
  return out;
}

void Learner::apply(Vec& params, const Vec& grad, double lr, AdamState& state) {
  if (config_.optimizer == Optimizer::kAdam) {
    state.step(params, grad, lr, config_);
  } else {
    params -= lr * grad;
  }
}

double Learner::critic_update(RegionIndex i, const Minibatch& batch) {
  const Vec targets = critic_targets(i, batch);
  const LossGrad lg = critic_loss(batch, targets);
  apply(critic_.parameters(), lg.grad, config_.lr_critic, critic_adam_);
  return lg.loss;
}

double Learner::actor_update(RegionIndex i, const Minibatch& batch) {
  const LossGrad lg = actor_loss(i, batch);
  PolicySubnet& actor = subnet(i);
  Vec theta = flatten(actor);
  apply(theta, lg.grad, config_.lr_actor, actor_adam_[static_cast<std::size_t>(i - 1)]);
  unflatten(theta, actor);
  return lg.loss;
}

void Learner::soft_update() {
  const double tau = config_.tau;
  target_critic_.parameters() = tau * critic_.parameters() + (1.0 - tau) * target_critic_.parameters();
  for (std::size_t i = 0; i < live_.subnets.size(); ++i) {
    PolicySubnet& t = target_.subnets[i];
    const PolicySubnet& s = live_.subnets[i];
    t.W = tau * s.W + (1.0 - tau) * t.W;
    t.b = tau * s.b + (1.0 - tau) * t.b;
  }
}

void Learner::snapshot_old_policies() { old_ = live_.subnets; }

Learner::SweepStats Learner::learn_sweep(bool update_actors) {
  SweepStats stats;
  for (RegionIndex i = 1; i <= live_.num_regions(); ++i) {
    if (!ready(i)) continue;
    const Minibatch mb = sample(i);
    stats.critic_loss_sum += critic_update(i, mb);
    if (update_actors) stats.actor_loss_sum += actor_update(i, mb);
    ++stats.updates;
  }
  return stats;
}

// ---------------------------------------------------------------- training

TrainingLog train(Learner& learner, envs::Env& env) {
  const TrainConfig& cfg = learner.config();
  if (env.state_dim() != learner.network().num_states() ||
      env.input_dim() != learner.network().num_inputs()) {
    throw ConfigError("environment and network dimensions differ");
  }
  auto env_rng = make_stream(cfg.seed, kEnv);
  const auto start = std::chrono::steady_clock::now();

  TrainingLog log;
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    EpisodeRecord rec;
    rec.episode = episode;
    learner.snapshot_old_policies();
    Vec x = env.reset(env_rng);
    double critic_sum = 0.0;
    double actor_sum = 0.0;
    int updates = 0;
    for (int t = 0; t < cfg.steps; ++t) {
      const ActResult a = learner.act(x);
      rec.fallback_steps += a.fallback ? 1 : 0;
      const envs::StepResult s = env.step(a.u);
      if (!s.state.allFinite() || !std::isfinite(s.reward)) {
        rec.aborted = true;
        break;
      }
      rec.cumulative_reward += s.reward;
      rec.steps = t + 1;
      learner.store({x, a.u, s.reward, s.state, s.violated});
      if (cfg.update_networks) {
        const auto stats = learner.learn_sweep(episode >= cfg.actor_warmup_episodes);
        critic_sum += stats.critic_loss_sum;
        actor_sum += stats.actor_loss_sum;
        updates += stats.updates;
        learner.soft_update();
      }
      x = s.state;
      if (s.violated) {
        rec.violated = true;
        break;
      }
    }
    if (updates > 0) {
      rec.critic_loss_mean = critic_sum / updates;
      rec.actor_loss_mean = actor_sum / updates;
    }
    if (!std::isfinite(rec.critic_loss_mean) || !std::isfinite(rec.actor_loss_mean)) {
      std::ostringstream os;
      os << "non-finite loss in episode " << episode << " (critic " << rec.critic_loss_mean
         << ", actor " << rec.actor_loss_mean << ")";
      throw NumericError(os.str());
    }
    for (const auto& b : learner.buffers()) rec.buffer_sizes.push_back(b.size());
    rec.dropped = learner.dropped();
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.episodes.push_back(std::move(rec));
  }
  return log;
}

std::string to_csv(const TrainingLog& log, const CsvHeader& header, bool wall_time) {
  std::ostringstream os;
  os << "# seed=" << header.seed << " config_digest=" << header.config_digest
     << " source_hash=" << header.source_hash << " version=" << library_version() << "\n";
  const std::size_t n_buffers = log.episodes.empty() ? 0 : log.episodes[0].buffer_sizes.size();
  os << "episode,cumulative_reward,steps";
  for (std::size_t i = 0; i < n_buffers; ++i) os << ",buffer_" << (i + 1);
  os << ",critic_loss_mean,actor_loss_mean,dropped,fallback_steps,aborted,violated";
  if (wall_time) os << ",wall_time";
  os << "\n";
  os << std::setprecision(17);
  for (const auto& r : log.episodes) {
    os << r.episode << ',' << r.cumulative_reward << ',' << r.steps;
    for (auto s : r.buffer_sizes) os << ',' << s;
    os << ',' << r.critic_loss_mean << ',' << r.actor_loss_mean << ',' << r.dropped << ','
       << r.fallback_steps << ',' << (r.aborted ? 1 : 0) << ',' << (r.violated ? 1 : 0);
    if (wall_time) os << ',' << r.wall_time;
    os << "\n";
  }
  return os.str();
}

}  // namespace empcnet::rl
