#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "empcnet/experiment.hpp"
#include "empcnet/serialize.hpp"

using namespace empcnet;
namespace fs = std::filesystem;

namespace {

const char* kDoubleIntegrator = R"({
  "seed": 3,
  "env": {"type": "double_integrator", "horizon": 2, "episode_length": 50},
  "train": {"episodes": 2, "batch": 8, "critic_hidden": [8]},
  "validate": {"samples": 500},
  "eval": {"episodes": 3}
})";

const char* kUnconstrainedLinear = R"({
  "seed": 1,
  "env": {"type": "linear",
          "problem": {"A": [[1, 0.1], [0, 1]], "B": [[0.005], [0.1]], "horizon": 3,
                      "Qx": [[1, 0], [0, 1]], "Ru": [[0.1]]},
          "domain": {"lower": [-1, -1], "upper": [1, 1]},
          "episode_length": 40},
  "train": {"episodes": 1, "batch": 4, "critic_hidden": [4]},
  "validate": {"samples": 200},
  "eval": {"episodes": 4}
})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST(Config, ParsesSectionsAndDefaults) {
  const ExperimentConfig c = config_from_text(kDoubleIntegrator);
  EXPECT_EQ(c.env, EnvKind::kDoubleIntegrator);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.train.seed, 3u);
  EXPECT_EQ(c.train.steps, 50);  // follows the episode length
  EXPECT_EQ(c.double_integrator.horizon, 2);
  EXPECT_EQ(c.validate.samples, 500);
  EXPECT_EQ(c.digest.size(), 16u);
  EXPECT_EQ(config_from_text(kDoubleIntegrator).digest, c.digest);
}

TEST(Config, DigestIgnoresFormatting) {
  const std::string compact = nlohmann::json::parse(kDoubleIntegrator).dump();
  EXPECT_EQ(config_from_text(compact).digest, config_from_text(kDoubleIntegrator).digest);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_text(replace(kDoubleIntegrator, "\"seed\"", "\"sed\"")), ConfigError);
  EXPECT_THROW(config_from_text(replace(kDoubleIntegrator, "\"horizon\": 2", "\"horizon\": 2, \"mass\": 1")),
               ConfigError);
  EXPECT_THROW(config_from_text(replace(kDoubleIntegrator, "double_integrator", "cartpole")),
               ConfigError);
  EXPECT_THROW(config_from_text(replace(kDoubleIntegrator, "\"batch\": 8", "\"batch\": -1")),
               ConfigError);
  EXPECT_THROW(config_from_text("{"), ConfigError);
  EXPECT_THROW(config_from_text("{\"seed\": 1}"), ConfigError);
}

TEST(Synthesize, ByteIdenticalReruns) {
  TempDir a("empcnet_syn_a"), b("empcnet_syn_b");
  std::ostringstream log;
  const ExperimentConfig c = config_from_text(kDoubleIntegrator);
  ASSERT_EQ(run_synthesize(c, a.path, log), 0) << log.str();
  ASSERT_EQ(run_synthesize(c, b.path, log), 0) << log.str();
  EXPECT_EQ(read_text_file(a.path / "solution.json"), read_text_file(b.path / "solution.json"));
  EXPECT_EQ(read_text_file(a.path / "network.json"), read_text_file(b.path / "network.json"));
  const std::string text = read_text_file(a.path / "solution.json");
  EXPECT_NE(text.find(c.digest), std::string::npos);
  EXPECT_NE(log.str().find("regions: "), std::string::npos);
}

TEST(Synthesize, UnconstrainedProblemGivesOneRegion) {
  TempDir d("empcnet_syn_lin");
  std::ostringstream log;
  ASSERT_EQ(run_synthesize(config_from_text(kUnconstrainedLinear), d.path, log), 0) << log.str();
  EXPECT_EQ(solution_from_text(read_text_file(d.path / "solution.json")).num_regions(), 1);
}

TEST(Synthesize, RegionCapWritesPartialFile) {
  TempDir d("empcnet_syn_cap");
  std::ostringstream log;
  ExperimentConfig c = config_from_text(kDoubleIntegrator);
  c.mpqp.region_cap = 2;
  EXPECT_EQ(run_synthesize(c, d.path, log), 3);
  EXPECT_TRUE(fs::exists(d.path / "solution.json.partial"));
  EXPECT_FALSE(fs::exists(d.path / "solution.json"));
  EXPECT_EQ(solution_from_text(read_text_file(d.path / "solution.json.partial")).num_regions(), 2);
}

TEST(Validate, FreshCorruptedAndEmpty) {
  TempDir d("empcnet_val");
  std::ostringstream log;
  const ExperimentConfig c = config_from_text(kDoubleIntegrator);
  ASSERT_EQ(run_synthesize(c, d.path, log), 0);
  const fs::path sol = d.path / "solution.json";
  EXPECT_EQ(run_validate(c, sol, std::nullopt, d.path, log), 0) << log.str();
  const auto report = nlohmann::json::parse(read_text_file(d.path / "validate_report.json"));
  EXPECT_LE(report["max_qp_deviation"].get<double>(), 1e-6);
  EXPECT_EQ(report["max_network_deviation"].get<double>(), 0.0);
  EXPECT_TRUE(report["passed"].get<bool>());

  EXPECT_EQ(run_validate(c, sol, 0, d.path, log), 0);
  const auto empty = nlohmann::json::parse(read_text_file(d.path / "validate_report.json"));
  EXPECT_EQ(empty["samples"].get<int>(), 0);
  EXPECT_EQ(empty["located"].get<int>(), 0);

  ExplicitSolution bad = solution_from_text(read_text_file(sol));
  bad.regions[0].F(0, 0) += 0.01;
  write_text_file(d.path / "bad.json", solution_to_text(bad));
  EXPECT_EQ(run_validate(c, d.path / "bad.json", std::nullopt, d.path, log), 2);

  write_text_file(d.path / "garbage.json", "{]");
  EXPECT_EQ(run_validate(c, d.path / "garbage.json", std::nullopt, d.path, log), 4);
}

TEST(TrainEval, UntrainedCheckpointReproducesExplicitController) {
  TempDir d("empcnet_eval");
  std::ostringstream log;
  const ExperimentConfig c = config_from_text(kDoubleIntegrator);
  ASSERT_EQ(run_synthesize(c, d.path, log), 0);
  ASSERT_EQ(run_eval(c, d.path / "network.json", std::nullopt, d.path / "solution.json",
                     d.path / "e1", log),
            0)
      << log.str();
  const std::string eval = read_text_file(d.path / "e1" / "eval.csv");
  std::istringstream in(eval);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    EXPECT_EQ(line.substr(a + 1, b - a - 1), line.substr(b + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_TRUE(fs::exists(d.path / "e1" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(d.path / "e1" / "eval_summary.csv"));

  ASSERT_EQ(run_eval(c, d.path / "network.json", 1, std::nullopt, d.path / "e2", log), 0);
  ASSERT_EQ(run_eval(c, d.path / "network.json", 1, std::nullopt, d.path / "e3", log), 0);
  EXPECT_EQ(read_text_file(d.path / "e2" / "eval.csv"), read_text_file(d.path / "e3" / "eval.csv"));
}

TEST(TrainEval, TrainWritesLogAndCheckpoint) {
  TempDir d("empcnet_train");
  std::ostringstream log;
  const ExperimentConfig c = config_from_text(kDoubleIntegrator);
  ASSERT_EQ(run_synthesize(c, d.path, log), 0);
  ASSERT_EQ(run_train(c, d.path / "solution.json", d.path / "t1", log), 0) << log.str();
  ASSERT_EQ(run_train(c, d.path / "solution.json", d.path / "t2", log), 0);
  const std::string csv = read_text_file(d.path / "t1" / "train_log.csv");
  EXPECT_EQ(csv, read_text_file(d.path / "t2" / "train_log.csv"));
  EXPECT_NE(csv.find("seed=3"), std::string::npos);
  EXPECT_NE(csv.find(c.digest), std::string::npos);
  const EncodedNetwork net = network_from_text(read_text_file(d.path / "t1" / "checkpoint.json"));
  EXPECT_EQ(net.source_hash,
            solution_digest(solution_from_text(read_text_file(d.path / "solution.json"))));
}

TEST(TrainEval, DimensionMismatchAndHashWarning) {
  TempDir d("empcnet_mismatch");
  std::ostringstream log;
  const ExperimentConfig di = config_from_text(kDoubleIntegrator);
  const ExperimentConfig lin = config_from_text(kUnconstrainedLinear);
  ASSERT_EQ(run_synthesize(di, d.path / "di", log), 0);
  ASSERT_EQ(run_synthesize(lin, d.path / "lin", log), 0);
  std::ostringstream warn;
  EXPECT_EQ(run_eval(lin, d.path / "lin" / "network.json", 1, d.path / "di" / "solution.json",
                     d.path / "e", warn),
            0);
  EXPECT_NE(warn.str().find("warning"), std::string::npos);

  ExperimentConfig pend = config_from_text(
      R"({"env": {"type": "pendulum"}, "train": {"episodes": 1}})");
  pend.pendulum.horizon = 1;
  EXPECT_EQ(run_train(pend, d.path / "di" / "solution.json", d.path / "t", log), 0);
  const char* three_state = R"({"env": {"type": "linear",
    "problem": {"A": [[1,0,0],[0,1,0],[0,0,1]], "B": [[1],[0],[0]], "Qx": [[1,0,0],[0,1,0],[0,0,1]],
                "Ru": [[1]], "u_min": [-1], "u_max": [1]},
    "domain": {"lower": [-1,-1,-1], "upper": [1,1,1]}}})";
  EXPECT_EQ(run_train(config_from_text(three_state), d.path / "di" / "solution.json", d.path / "t",
                      log),
            4);
}
