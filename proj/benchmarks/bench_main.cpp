#include <benchmark/benchmark.h>

#include <random>

#include "empcnet/envs.hpp"
#include "empcnet/mpqp.hpp"
#include "empcnet/netenc.hpp"
#include "empcnet/pwa.hpp"
#include "empcnet/rl.hpp"

using namespace empcnet;

namespace {

struct Setup {
  envs::Plant plant = envs::make_double_integrator();
  CondensedQp qp = condense(plant.design);
  ExplicitSolution solution = explore(qp, plant.domain).solution;
  PwaPolicy policy{solution};
  EncodedNetwork network = encode(solution);
  std::vector<Vec> points;

  Setup() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1024; ++i) {
      Vec x(2);
      for (int d = 0; d < 2; ++d) {
        x(d) = plant.domain.lower(d) + unit(rng) * (plant.domain.upper(d) - plant.domain.lower(d));
      }
      points.push_back(x);
    }
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_Explore(benchmark::State& state) {
  envs::DoubleIntegratorParams p;
  p.horizon = static_cast<int>(state.range(0));
  const envs::Plant plant = envs::make_double_integrator(p);
  const CondensedQp qp = condense(plant.design);
  for (auto _ : state) benchmark::DoNotOptimize(explore(qp, plant.domain));
}
BENCHMARK(BM_Explore)->Arg(2)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_PointwiseQp(benchmark::State& state) {
  const Setup& s = setup();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_pointwise_qp(s.qp, s.points[i++ % s.points.size()]));
}
BENCHMARK(BM_PointwiseQp);

void BM_PwaEvaluate(benchmark::State& state) {
  const Setup& s = setup();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(s.policy.evaluate(s.points[i++ % s.points.size()]));
}
BENCHMARK(BM_PwaEvaluate);

void BM_NetworkRoute(benchmark::State& state) {
  const Setup& s = setup();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(route(s.network, s.points[i++ % s.points.size()]));
}
BENCHMARK(BM_NetworkRoute);

void BM_TrainEpisode(benchmark::State& state) {
  const envs::Plant plant = envs::make_pendulum();
  const EncodedNetwork net = encode(explore(condense(plant.design), plant.domain).solution);
  rl::TrainConfig c;
  c.episodes = 1;
  c.critic_hidden = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  for (auto _ : state) {
    rl::Learner learner(net, plant.env->input_box(), c);
    benchmark::DoNotOptimize(rl::train(learner, *plant.env));
  }
}
BENCHMARK(BM_TrainEpisode)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
