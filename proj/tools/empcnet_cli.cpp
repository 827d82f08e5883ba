// empcnet command-line tool: synthesize, validate, train, eval.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "empcnet/experiment.hpp"
#include "empcnet/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "overrides the config seed");
}

empcnet::ExperimentConfig load(const Common& c) {
  auto cfg = empcnet::load_config(c.config);
  if (c.seed) empcnet::set_seed(cfg, *c.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit MPC synthesis, network encoding and fine-tuning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(empcnet::library_version()));

  Common syn, val, trn, evl;
  auto* synthesize = app.add_subcommand("synthesize", "solve the mpQP and encode the network");
  add_common(synthesize, syn);

  auto* validate = app.add_subcommand("validate", "check a solution against pointwise QPs");
  add_common(validate, val);
  std::string val_solution;
  std::optional<int> val_samples;
  validate->add_option("--solution", val_solution, "solution file")->required();
  validate->add_option("--samples", val_samples, "number of uniform samples");

  auto* train = app.add_subcommand("train", "fine-tune the policy subnets");
  add_common(train, trn);
  std::string trn_solution;
  train->add_option("--solution", trn_solution, "solution file")->required();

  auto* eval = app.add_subcommand("eval", "noise-free evaluation of a checkpoint");
  add_common(eval, evl);
  std::string evl_checkpoint;
  std::optional<std::string> evl_solution;
  std::optional<int> evl_episodes;
  eval->add_option("--checkpoint", evl_checkpoint, "network checkpoint")->required();
  eval->add_option("--solution", evl_solution, "solution for hash check and EMPC baseline");
  eval->add_option("--episodes", evl_episodes, "number of episodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (*synthesize) return empcnet::run_synthesize(load(syn), syn.out, std::cout);
    if (*validate) {
      return empcnet::run_validate(load(val), val_solution, val_samples, val.out, std::cout);
    }
    if (*train) return empcnet::run_train(load(trn), trn_solution, trn.out, std::cout);
    if (*eval) {
      std::optional<fs::path> solution;
      if (evl_solution) solution = *evl_solution;
      return empcnet::run_eval(load(evl), evl_checkpoint, evl_episodes, solution, evl.out,
                               std::cout);
    }
  } catch (const empcnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
  return 4;
}
