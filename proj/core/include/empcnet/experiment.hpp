#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "empcnet/envs.hpp"
#include "empcnet/mpqp.hpp"
#include "empcnet/netenc.hpp"
#include "empcnet/rl.hpp"

namespace empcnet {

enum class EnvKind { kDoubleIntegrator, kPendulum, kLinear };

struct ValidateSettings {
  int samples = 10000;
  double qp_tolerance = 1e-6;       // explicit law vs pointwise QP
  double network_tolerance = 1e-9;  // network vs explicit law
  double min_coverage = 1.0;        // feasible samples that must be located
};

// Everything a run depends on besides the code version. Schema in
// docs/formats.md.
struct ExperimentConfig {
  EnvKind env = EnvKind::kDoubleIntegrator;
  envs::DoubleIntegratorParams double_integrator;
  envs::PendulumParams pendulum;
  envs::MismatchSpec mismatch;
  // Linear env only.
  std::optional<LtiProblem> problem;
  DomainBox linear_domain;
  DomainBox linear_initial;
  int linear_episode_length = 200;

  MpqpOptions mpqp;
  EncodeOptions encode;
  rl::TrainConfig train;
  ValidateSettings validate;
  int eval_episodes = 20;
  std::uint64_t seed = 0;

  std::string digest;  // FNV-1a of the canonical config text

  envs::Plant make_plant() const;
};

ExperimentConfig config_from_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Overrides the run seed (and the training seed with it).
void set_seed(ExperimentConfig& config, std::uint64_t seed);

// Command implementations. Each returns the process exit code (0 ok,
// 2 validation failure, 3 numeric abort, 4 config error) and writes its
// artifacts into `out_dir`; progress and summaries go to `log`.
int run_synthesize(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                   std::ostream& log);

struct ValidationReport {
  int samples = 0;
  int feasible = 0;
  int located = 0;
  double max_qp_deviation = 0.0;
  double max_network_deviation = 0.0;
  double coverage = 1.0;  // located / feasible, 1 when nothing is feasible
  bool passed = true;
};
ValidationReport validate_solution(const ExperimentConfig& config, const ExplicitSolution& solution,
                                   int samples);
int run_validate(const ExperimentConfig& config, const std::filesystem::path& solution_file,
                 std::optional<int> samples, const std::filesystem::path& out_dir,
                 std::ostream& log);

int run_train(const ExperimentConfig& config, const std::filesystem::path& solution_file,
              const std::filesystem::path& out_dir, std::ostream& log);

int run_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint_file,
             std::optional<int> episodes, const std::optional<std::filesystem::path>& solution_file,
             const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace empcnet
