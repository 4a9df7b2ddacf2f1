#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "prism/detectors.hpp"
#include "prism/geometry.hpp"
#include "prism/synthetic.hpp"

using namespace prism;

namespace {

EmbeddingSet mock_set(std::size_t rows, std::size_t dim) {
  MockDomainsSpec spec;
  spec.dim = dim;
  spec.rows_per_domain = rows;
  spec.domains = {"bench"};
  return make_mock_domains(spec).front();
}

void BM_VarianceRatio(benchmark::State& state) {
  const auto set = mock_set(state.range(0), state.range(1));
  for (auto _ : state) {
    const auto dir = truth_direction(set);
    benchmark::DoNotOptimize(variance_ratio(set, dir).ratio);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VarianceRatio)->Args({1000, 64})->Args({1000, 4096})->Args({10000, 512})->Unit(benchmark::kMillisecond);

void BM_Pca2(benchmark::State& state) {
  const auto set = mock_set(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(pca2(set).explained[0]);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
// Shapes whose mock spectrum leaves a usable gap below the second component;
// 1000 x 64 does not (lambda3 / lambda2 ~ 0.9997) and raises ConvergenceError.
BENCHMARK(BM_Pca2)->Args({1000, 32})->Args({1000, 512})->Args({1000, 4096})->Unit(benchmark::kMillisecond);

// One epoch of the 256/128/64 network with validation.
void BM_MlpEpoch(benchmark::State& state) {
  const auto set = mock_set(state.range(0), state.range(1));
  MlpTrainConfig config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_mlp(set, 0, config).kind());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpEpoch)->Args({1000, 64})->Args({1000, 4096})->Unit(benchmark::kMillisecond);

void BM_Auroc(benchmark::State& state) {
  std::mt19937_64 gen(0);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(state.range(0));
  std::vector<std::uint8_t> y(state.range(0));
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(gen);
    y[i] = gen() & 1u;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auroc(s, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_FitThreshold(benchmark::State& state) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  std::vector<double> s(state.range(0));
  std::vector<std::uint8_t> y(state.range(0));
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = gen() & 1u;
    s[i] = z(gen) + y[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_threshold(s, y).kind());
}
BENCHMARK(BM_FitThreshold)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
