// Serial reference vs OpenMP kernels on autoencoder-sized shapes.

#include <benchmark/benchmark.h>

#include "support/synthetic.hpp"
#include "uavids/autoencoder.hpp"
#include "uavids/detector.hpp"
#include "uavids/feature_engineering.hpp"
#include "uavids/kernels.hpp"
#include "uavids/rng.hpp"

namespace {

using namespace uavids;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.flat()) v = rng.uniform();
  return m;
}

template <Execution E>
void BM_AffineForward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(rows, 33, 1);
  const auto w = random_matrix(24, 33, 2);
  const std::vector<double> b(24, 0.1);
  Matrix out(rows, 24);
  for (auto _ : state) {
    kernels::affine_forward(x, w, b, out, E);
    benchmark::DoNotOptimize(out.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_AffineForward<Execution::Serial>)->Arg(32)->Arg(4096);
BENCHMARK(BM_AffineForward<Execution::Parallel>)->Arg(32)->Arg(4096);

template <Execution E>
void BM_Gradients(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto p = init_params(Architecture{}, 3);
  const auto x = random_matrix(rows, 33, 4);
  const TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(gradients(p, x, cfg, E));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_Gradients<Execution::Serial>)->Arg(32)->Arg(1024);
BENCHMARK(BM_Gradients<Execution::Parallel>)->Arg(32)->Arg(1024);

template <Execution E>
void BM_Score(benchmark::State& state) {
  const auto data = testing::make_manifold_data({.n_train = 4000, .n_validation = 10,
                                                 .n_test = 10, .n_attack = 10});
  const auto p = init_params(Architecture{}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(score(p, data.train, E));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.train.rows()));
}
BENCHMARK(BM_Score<Execution::Serial>);
BENCHMARK(BM_Score<Execution::Parallel>);

template <Execution E>
void BM_Pooling(benchmark::State& state) {
  const auto log = testing::make_mixed_rate_log(20000, 6);
  const FeatureCatalog catalog({{"feature_a", Category::IMU},
                                {"feature_b", Category::IMU},
                                {"feature_c", Category::IMU}});
  const PoolingConfig cfg{.rng_seed = 7};
  for (auto _ : state) benchmark::DoNotOptimize(pool_timestamps(log, catalog, cfg, E));
}
BENCHMARK(BM_Pooling<Execution::Serial>);
BENCHMARK(BM_Pooling<Execution::Parallel>);

}  // namespace

BENCHMARK_MAIN();
