#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mfc/dp_oracle.hpp"
#include "mfc/envs.hpp"
#include "mfc/neural.hpp"
#include "mfc/rng.hpp"
#include "mfc/simplex.hpp"

namespace {

using namespace mfc;

void BM_Project(benchmark::State& state) {
  const auto resolution = static_cast<std::size_t>(state.range(0));
  const SimplexGrid grid(4, resolution);
  Rng rng = make_rng(1, "bench.project");
  std::vector<std::vector<double>> points(256);
  for (auto& p : points) {
    p.resize(4);
    double total = 0.0;
    for (auto& x : p) total += x = std::exponential_distribution<double>(1.0)(rng);
    for (auto& x : p) x /= total;
  }
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(project(points[k++ % points.size()], grid));
  }
}
BENCHMARK(BM_Project)->Arg(8)->Arg(32)->Arg(128);

void BM_BellmanT(benchmark::State& state) {
  const CyberEnv env{CyberParams{}};
  const SimplexGrid grid(env.state_dim(), static_cast<std::size_t>(state.range(0)));
  const ProjectedModel model(env, grid, NoisePanel::deterministic(env));
  ValueTable v{std::vector<double>(grid.size(), 0.0)};
  for (auto _ : state) {
    v = bellman_T(v, model, 0.9);
    benchmark::DoNotOptimize(v.values.data());
  }
  state.counters["points"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_BellmanT)->Arg(4)->Arg(8);

MLPParams bench_net(std::size_t hidden) {
  Rng rng = make_rng(1, "bench.mlp");
  return make_mlp(MLPSpec{{34, hidden, hidden, 1}}, rng);
}

void BM_MlpForwardBatch(benchmark::State& state) {
  const auto net = bench_net(static_cast<std::size_t>(state.range(0)));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(34, 64);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward_batch(net, x));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(64)->Arg(256);

void BM_MlpBackwardBatch(benchmark::State& state) {
  const auto net = bench_net(static_cast<std::size_t>(state.range(0)));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(34, 64);
  const Eigen::MatrixXd up = Eigen::MatrixXd::Ones(1, 64);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_backward_batch(net, x, up));
}
BENCHMARK(BM_MlpBackwardBatch)->Arg(64)->Arg(256);

void BM_SwarmStep(benchmark::State& state) {
  SwarmParams p;
  p.n_points = static_cast<std::size_t>(state.range(0));
  const double h = p.cell_width();
  p.dt = 0.4 * h * h;
  const SwarmEnv env(p);
  const auto mu = swarm_stationary_density(p);
  const auto action = swarm_optimal_control_profile(p);
  for (auto _ : state) benchmark::DoNotOptimize(env.step(mu, action, env.neutral_noise()));
}
BENCHMARK(BM_SwarmStep)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
