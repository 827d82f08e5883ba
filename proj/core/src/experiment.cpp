#include "empcnet/experiment.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "empcnet/closed_loop.hpp"
#include "empcnet/pwa.hpp"
#include "empcnet/serialize.hpp"
#include "json_eigen.hpp"

namespace empcnet {
namespace {

namespace fs = std::filesystem;
using detail::json;

constexpr std::uint64_t kValidateStream = 6;
constexpr int kCoverageOffset = 1'000'000;  // Halton indices unused by exploration

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string("section '") + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw ConfigError(std::string("unknown key '") + item.key() + "' in section '" + section +
                        "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

DomainBox box_from_json(const json& j) {
  check_keys(j, "box", {"lower", "upper"});
  DomainBox box{detail::vec_from_json(j.at("lower")), detail::vec_from_json(j.at("upper"))};
  box.validate();
  return box;
}

void read_box(const json& obj, const char* key, DomainBox& out) {
  if (obj.contains(key)) out = box_from_json(obj.at(key));
}

void parse_double_integrator(const json& j, envs::DoubleIntegratorParams& p) {
  check_keys(j, "env", {"type", "dt", "u_max", "Qx", "Ru", "horizon", "lqr_terminal",
                        "episode_length", "initial", "domain", "safe"});
  read(j, "dt", p.dt);
  read(j, "u_max", p.u_max);
  if (j.contains("Qx")) p.Qx = detail::mat_from_json(j.at("Qx"));
  if (j.contains("Ru")) p.Ru = detail::mat_from_json(j.at("Ru"));
  read(j, "horizon", p.horizon);
  read(j, "lqr_terminal", p.lqr_terminal);
  read(j, "episode_length", p.episode_length);
  read_box(j, "initial", p.initial);
  read_box(j, "domain", p.domain);
  read_box(j, "safe", p.safe);
}

void parse_pendulum(const json& j, envs::PendulumParams& p, envs::MismatchSpec& mismatch) {
  check_keys(j, "env", {"type", "gravity", "length", "mass", "dt", "substeps", "torque_max",
                        "initial_angle", "initial_rate", "safe_angle", "safe_rate",
                        "angle_weight", "rate_weight", "torque_weight", "episode_length",
                        "horizon", "lqr_terminal", "domain", "mass_error"});
  read(j, "gravity", p.gravity);
  read(j, "length", p.length);
  read(j, "mass", p.mass);
  read(j, "dt", p.dt);
  read(j, "substeps", p.substeps);
  read(j, "torque_max", p.torque_max);
  read(j, "initial_angle", p.initial_angle);
  read(j, "initial_rate", p.initial_rate);
  read(j, "safe_angle", p.safe_angle);
  read(j, "safe_rate", p.safe_rate);
  read(j, "angle_weight", p.angle_weight);
  read(j, "rate_weight", p.rate_weight);
  read(j, "torque_weight", p.torque_weight);
  read(j, "episode_length", p.episode_length);
  read(j, "horizon", p.horizon);
  read(j, "lqr_terminal", p.lqr_terminal);
  read_box(j, "domain", p.domain);
  read(j, "mass_error", mismatch.mass_error);
}

void parse_train(const json& j, rl::TrainConfig& t) {
  check_keys(j, "train", {"gamma", "tau", "kl_weight", "episodes", "steps", "batch", "lr_actor",
                          "lr_critic", "noise_scale", "buffer_capacity", "critic_hidden",
                          "optimizer", "adam_beta1", "adam_beta2", "adam_epsilon",
                          "disabled_buffers", "update_networks", "log_wall_time",
                          "actor_warmup_episodes", "reward_scale", "min_buffer_fill"});
  read(j, "gamma", t.gamma);
  read(j, "tau", t.tau);
  read(j, "kl_weight", t.kl_weight);
  read(j, "episodes", t.episodes);
  read(j, "steps", t.steps);
  read(j, "batch", t.batch);
  read(j, "lr_actor", t.lr_actor);
  read(j, "lr_critic", t.lr_critic);
  read(j, "noise_scale", t.noise_scale);
  read(j, "buffer_capacity", t.buffer_capacity);
  read(j, "critic_hidden", t.critic_hidden);
  if (j.contains("optimizer")) {
    const auto name = j.at("optimizer").get<std::string>();
    if (name == "sgd") {
      t.optimizer = rl::Optimizer::kSgd;
    } else if (name == "adam") {
      t.optimizer = rl::Optimizer::kAdam;
    } else {
      throw ConfigError("optimizer must be \"sgd\" or \"adam\"");
    }
  }
  read(j, "adam_beta1", t.adam_beta1);
  read(j, "adam_beta2", t.adam_beta2);
  read(j, "adam_epsilon", t.adam_epsilon);
  read(j, "disabled_buffers", t.disabled_buffers);
  read(j, "update_networks", t.update_networks);
  read(j, "log_wall_time", t.log_wall_time);
  read(j, "actor_warmup_episodes", t.actor_warmup_episodes);
  read(j, "reward_scale", t.reward_scale);
  read(j, "min_buffer_fill", t.min_buffer_fill);
}

ExperimentConfig parse(const json& doc) {
  check_keys(doc, "root", {"seed", "env", "mpqp", "encode", "train", "validate", "eval"});
  ExperimentConfig cfg;
  read(doc, "seed", cfg.seed);

  const json& env = doc.at("env");
  if (!env.is_object()) throw ConfigError("section 'env' must be an object");
  const auto type = env.value("type", std::string("double_integrator"));
  int episode_length = 0;
  if (type == "double_integrator") {
    cfg.env = EnvKind::kDoubleIntegrator;
    parse_double_integrator(env, cfg.double_integrator);
    episode_length = cfg.double_integrator.episode_length;
  } else if (type == "pendulum") {
    cfg.env = EnvKind::kPendulum;
    parse_pendulum(env, cfg.pendulum, cfg.mismatch);
    cfg.mismatch.validate();
    episode_length = cfg.pendulum.episode_length;
  } else if (type == "linear") {
    cfg.env = EnvKind::kLinear;
    check_keys(env, "env", {"type", "problem", "domain", "initial", "episode_length"});
    cfg.problem = detail::problem_from_json(env.at("problem"));
    cfg.linear_domain = box_from_json(env.at("domain"));
    cfg.linear_initial =
        env.contains("initial") ? box_from_json(env.at("initial")) : cfg.linear_domain;
    read(env, "episode_length", cfg.linear_episode_length);
    episode_length = cfg.linear_episode_length;
  } else {
    throw ConfigError("env.type must be double_integrator, pendulum or linear");
  }
  if (episode_length < 1) throw ConfigError("episode_length must be >= 1");

  if (doc.contains("mpqp")) {
    const json& j = doc.at("mpqp");
    check_keys(j, "mpqp", {"lp_tolerance", "min_radius", "step_fraction", "region_cap",
                           "repair_samples", "qp_tolerance", "qp_max_iterations"});
    read(j, "lp_tolerance", cfg.mpqp.lp_tolerance);
    read(j, "min_radius", cfg.mpqp.min_radius);
    read(j, "step_fraction", cfg.mpqp.step_fraction);
    read(j, "region_cap", cfg.mpqp.region_cap);
    read(j, "repair_samples", cfg.mpqp.repair_samples);
    read(j, "qp_tolerance", cfg.mpqp.qp.tolerance);
    read(j, "qp_max_iterations", cfg.mpqp.qp.max_iterations);
  }
  if (doc.contains("encode")) {
    check_keys(doc.at("encode"), "encode", {"max_parameters"});
    read(doc.at("encode"), "max_parameters", cfg.encode.max_parameters);
  }
  cfg.train.steps = episode_length;
  if (doc.contains("train")) parse_train(doc.at("train"), cfg.train);
  if (doc.contains("validate")) {
    const json& j = doc.at("validate");
    check_keys(j, "validate", {"samples", "qp_tolerance", "network_tolerance", "min_coverage"});
    read(j, "samples", cfg.validate.samples);
    read(j, "qp_tolerance", cfg.validate.qp_tolerance);
    read(j, "network_tolerance", cfg.validate.network_tolerance);
    read(j, "min_coverage", cfg.validate.min_coverage);
    if (cfg.validate.samples < 0) throw ConfigError("validate.samples must be >= 0");
  }
  if (doc.contains("eval")) {
    check_keys(doc.at("eval"), "eval", {"episodes"});
    read(doc.at("eval"), "episodes", cfg.eval_episodes);
  }
  if (cfg.eval_episodes < 0) throw ConfigError("eval.episodes must be >= 0");
  set_seed(cfg, cfg.seed);
  cfg.train.validate();
  cfg.digest = fnv1a_hex(doc.dump());
  return cfg;
}

Provenance provenance_of(const ExperimentConfig& cfg) { return {cfg.digest, cfg.seed}; }

std::string header_line(const ExperimentConfig& cfg, const std::string& source_hash) {
  std::ostringstream os;
  os << "# seed=" << cfg.seed << " config_digest=" << cfg.digest
     << " source_hash=" << source_hash << " version=" << library_version() << "\n";
  return os.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 4;
  }
}

ExplicitSolution load_solution(const fs::path& path) {
  return solution_from_text(read_text_file(path));
}

void check_dimensions(const ExplicitSolution& solution, const envs::Env& env) {
  if (solution.n != env.state_dim() || solution.m != env.input_dim()) {
    std::ostringstream os;
    os << "solution dimensions (n=" << solution.n << ", m=" << solution.m
       << ") do not match the environment (n=" << env.state_dim() << ", m=" << env.input_dim()
       << ")";
    throw ConfigError(os.str());
  }
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

}  // namespace

envs::Plant ExperimentConfig::make_plant() const {
  switch (env) {
    case EnvKind::kDoubleIntegrator:
      return envs::make_double_integrator(double_integrator);
    case EnvKind::kPendulum:
      return envs::make_pendulum(pendulum, mismatch);
    case EnvKind::kLinear:
      if (!problem) throw ConfigError("linear env requires a problem");
      return envs::make_linear(*problem, linear_domain, linear_initial, linear_episode_length);
  }
  throw ConfigError("unknown env kind");
}

ExperimentConfig config_from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_text(read_text_file(path));
}

void set_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.train.seed = seed;
}

// ---------------------------------------------------------------- synthesize

int run_synthesize(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    ensure_dir(out_dir);
    const envs::Plant plant = config.make_plant();
    const CondensedQp qp = condense(plant.design);
    ExploreReport report;
    try {
      report = explore(qp, plant.domain, config.mpqp);
    } catch (const RegionCapError& e) {
      const fs::path partial = out_dir / "solution.json.partial";
      write_text_file(partial, solution_to_text(e.partial().solution, provenance_of(config)));
      log << "error: " << e.what() << "\n"
          << "partial solution with " << e.partial().solution.num_regions()
          << " regions written to " << partial.string() << "\n";
      return e.exit_code();
    }
    const ExplicitSolution& solution = report.solution;
    for (const auto& d : report.degenerate) {
      log << "warning: skipped degenerate active set {";
      for (std::size_t i = 0; i < d.active_set.size(); ++i) {
        log << (i ? "," : "") << d.active_set[i];
      }
      log << "} (" << to_string(d.reason) << ")\n";
    }

    // Coverage on Halton points the exploration never used as seeds.
    const PwaPolicy policy(solution);
    const int probes = std::min(config.validate.samples, 4096);
    int feasible = 0;
    int located = 0;
    const Vec width = plant.domain.upper - plant.domain.lower;
    for (int s = 0; s < probes; ++s) {
      const Vec x =
          plant.domain.lower + width.cwiseProduct(halton_point(kCoverageOffset + s, solution.n));
      if (!solve_pointwise_qp(qp, x, config.mpqp.qp).feasible) continue;
      ++feasible;
      if (policy.locate(x) != kOutside) ++located;
    }

    const EncodedNetwork network = encode(solution, config.encode);
    write_text_file(out_dir / "solution.json", solution_to_text(solution, provenance_of(config)));
    write_text_file(out_dir / "network.json", network_to_text(network, provenance_of(config)));

    log << "regions: " << solution.num_regions() << "\n"
        << "total facets: " << solution.total_facets() << "\n"
        << "degenerate active sets skipped: " << report.degenerate.size() << "\n"
        << "pointwise QP solves: " << report.pointwise_solves << "\n"
        << "facets crossed: " << report.facets_crossed << "\n"
        << "regions seeded by coverage repair: " << report.repair_seeds << "\n"
        << "coverage: " << located << "/" << feasible << " feasible probe points located\n"
        << "network parameters: " << network.num_parameters() << "\n"
        << "source hash: " << network.source_hash << "\n";
    return 0;
  });
}

// ------------------------------------------------------------------ validate

ValidationReport validate_solution(const ExperimentConfig& config, const ExplicitSolution& solution,
                                   int samples) {
  const envs::Plant plant = config.make_plant();
  check_dimensions(solution, *plant.env);
  const CondensedQp qp = condense(plant.design);
  const PwaPolicy policy(solution);
  const EncodedNetwork network = encode(solution, config.encode);
  const DomainBox& domain = solution.domain;

  ValidationReport rep;
  rep.samples = samples;
  auto rng = rl::make_stream(config.seed, kValidateStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double inf = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec x(solution.n);
    for (int i = 0; i < solution.n; ++i) {
      x(i) = domain.lower(i) + unit(rng) * (domain.upper(i) - domain.lower(i));
    }
    const PointwiseSolution pw = solve_pointwise_qp(qp, x, config.mpqp.qp);
    const RegionIndex r = policy.locate(x);
    if (r != kOutside) {
      const auto routed = route(network, x);
      const double dev =
          routed ? inf_norm(routed->u - policy.first_input(r, x)) : inf;
      rep.max_network_deviation = std::max(rep.max_network_deviation, dev);
    }
    if (!pw.feasible) continue;
    ++rep.feasible;
    if (r == kOutside) continue;
    ++rep.located;
    const Vec U = solution.regions[static_cast<std::size_t>(r - 1)].sequence(x);
    rep.max_qp_deviation = std::max(rep.max_qp_deviation, inf_norm(U - pw.U));
  }
  rep.coverage = rep.feasible == 0 ? 1.0 : static_cast<double>(rep.located) / rep.feasible;
  rep.passed = rep.max_qp_deviation <= config.validate.qp_tolerance &&
               rep.max_network_deviation <= config.validate.network_tolerance &&
               rep.coverage >= config.validate.min_coverage;
  return rep;
}

int run_validate(const ExperimentConfig& config, const fs::path& solution_file,
                 std::optional<int> samples, const fs::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    ensure_dir(out_dir);
    const ExplicitSolution solution = load_solution(solution_file);
    const int n = samples.value_or(config.validate.samples);
    if (n < 0) throw ConfigError("samples must be >= 0");
    const ValidationReport rep = validate_solution(config, solution, n);

    json doc = {{"format", "empcnet.validation_report"},
                {"schema_version", 1},
                {"tool_version", library_version()},
                {"provenance", {{"config_digest", config.digest}, {"seed", config.seed}}},
                {"source_hash", solution_digest(solution)},
                {"samples", rep.samples},
                {"feasible", rep.feasible},
                {"located", rep.located},
                {"coverage", rep.coverage},
                {"max_qp_deviation", rep.max_qp_deviation},
                {"max_network_deviation", rep.max_network_deviation},
                {"qp_tolerance", config.validate.qp_tolerance},
                {"network_tolerance", config.validate.network_tolerance},
                {"min_coverage", config.validate.min_coverage},
                {"passed", rep.passed}};
    if (std::isinf(rep.max_network_deviation)) doc["max_network_deviation"] = "inf";
    write_text_file(out_dir / "validate_report.json", doc.dump(2) + "\n");

    log << std::setprecision(6) << "samples: " << rep.samples << "\n"
        << "coverage: " << rep.located << "/" << rep.feasible << " (" << rep.coverage << ")\n"
        << "max explicit-vs-QP deviation: " << rep.max_qp_deviation << "\n"
        << "max network-vs-explicit deviation: " << rep.max_network_deviation << "\n"
        << (rep.passed ? "validation passed" : "validation FAILED") << "\n";
    return rep.passed ? 0 : 2;
  });
}

// --------------------------------------------------------------------- train

int run_train(const ExperimentConfig& config, const fs::path& solution_file, const fs::path& out_dir,
              std::ostream& log) {
  return guarded(log, [&] {
    ensure_dir(out_dir);
    const ExplicitSolution solution = load_solution(solution_file);
    envs::Plant plant = config.make_plant();
    check_dimensions(solution, *plant.env);
    EncodedNetwork network = encode(solution, config.encode);
    const std::string source_hash = network.source_hash;

    rl::Learner learner(std::move(network), plant.env->input_box(), config.train);
    const rl::TrainingLog tlog = rl::train(learner, *plant.env);

    rl::CsvHeader header{config.seed, config.digest, source_hash};
    write_text_file(out_dir / "train_log.csv", rl::to_csv(tlog, header, config.train.log_wall_time));
    write_text_file(out_dir / "checkpoint.json",
                    network_to_text(learner.network(), provenance_of(config)));

    std::vector<double> rewards;
    for (const auto& e : tlog.episodes) rewards.push_back(e.cumulative_reward);
    const MeanStd all = mean_std(rewards);
    log << std::setprecision(6) << "episodes: " << tlog.episodes.size() << "\n"
        << "mean cumulative reward: " << all.mean << " +- " << all.std << "\n"
        << "dropped transitions: " << learner.dropped() << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------------- eval

int run_eval(const ExperimentConfig& config, const fs::path& checkpoint_file,
             std::optional<int> episodes, const std::optional<fs::path>& solution_file,
             const fs::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    ensure_dir(out_dir);
    const EncodedNetwork network = network_from_text(read_text_file(checkpoint_file));
    envs::Plant plant = config.make_plant();
    if (network.num_states() != plant.env->state_dim() ||
        network.num_inputs() != plant.env->input_dim()) {
      throw ConfigError("checkpoint dimensions do not match the environment");
    }
    std::optional<PwaPolicy> policy;
    if (solution_file) {
      ExplicitSolution solution = load_solution(*solution_file);
      if (solution_digest(solution) != network.source_hash) {
        log << "warning: checkpoint source hash " << network.source_hash
            << " does not match solution " << solution_digest(solution) << "\n";
      }
      check_dimensions(solution, *plant.env);
      policy.emplace(std::move(solution));
    }

    const int count = episodes.value_or(config.eval_episodes);
    if (count < 0) throw ConfigError("episodes must be >= 0");
    const auto starts = evaluation_starts(*plant.env, config.seed, count);
    const DomainBox& input_box = plant.env->input_box();
    const Controller net_ctrl = network_controller(network, input_box);
    const std::vector<double> rewards = evaluate_controller(*plant.env, net_ctrl, starts);
    std::vector<double> empc;
    if (policy) empc = evaluate_controller(*plant.env, pwa_controller(*policy, input_box), starts);

    std::ostringstream csv;
    csv << header_line(config, network.source_hash) << "episode,cumulative_reward";
    if (policy) csv << ",empc_cumulative_reward";
    csv << "\n" << std::setprecision(17);
    for (std::size_t e = 0; e < rewards.size(); ++e) {
      csv << e << ',' << rewards[e];
      if (policy) csv << ',' << empc[e];
      csv << "\n";
    }
    write_text_file(out_dir / "eval.csv", csv.str());

    const MeanStd ms = mean_std(rewards);
    std::ostringstream summary;
    summary << header_line(config, network.source_hash) << "controller,episodes,mean,std\n"
            << std::setprecision(17) << "network," << rewards.size() << ',' << ms.mean << ','
            << ms.std << "\n";
    if (policy) {
      const MeanStd e = mean_std(empc);
      summary << "empc," << empc.size() << ',' << e.mean << ',' << e.std << "\n";
    }
    write_text_file(out_dir / "eval_summary.csv", summary.str());

    if (!starts.empty()) {
      const Trajectory traj =
          rollout(*plant.env, starts.front(), net_ctrl, plant.env->episode_length());
      write_text_file(out_dir / "trajectory.csv",
                      header_line(config, network.source_hash) + trajectory_to_csv(traj));
    }

    log << std::setprecision(6) << "episodes: " << rewards.size() << "\n"
        << "network cumulative reward: " << ms.mean << " +- " << ms.std << "\n";
    if (policy) {
      const MeanStd e = mean_std(empc);
      log << "empc cumulative reward: " << e.mean << " +- " << e.std << "\n";
    }
    return 0;
  });
}

}  // namespace empcnet
