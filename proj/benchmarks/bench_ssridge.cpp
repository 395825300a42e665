#include <benchmark/benchmark.h>

#include "ssridge/datagen.hpp"
#include "ssridge/datapath.hpp"
#include "ssridge/estimators.hpp"
#include "ssridge/spectral.hpp"
#include "ssridge/theory.hpp"

using namespace ssridge;

static void BM_SolveV(benchmark::State& state) {
  const SpectralDistribution h = spectrum_of(ar1_covariance(state.range(0), 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(solve_v(0.1, ExtReal(2.0), h).v);
}
BENCHMARK(BM_SolveV)->Arg(100)->Arg(1000);

static void BM_FitRidge(benchmark::State& state) {
  const Index k = state.range(0), p = state.range(1);
  const Dataset d = gen_m_ar1(k, p, 0.5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_ridge(d.X, d.y, 0.1));
}
BENCHMARK(BM_FitRidge)->Args({1000, 100})->Args({100, 1000})->Args({2000, 500})->Unit(benchmark::kMillisecond);

static void BM_FitEnsemble(benchmark::State& state) {
  const Dataset d = gen_m_ar1(2000, 200, 0.5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_ensemble(d, 100, state.range(0), 0.0, 3).beta_bar);
}
BENCHMARK(BM_FitEnsemble)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_LambdaBarData(benchmark::State& state) {
  const MatrixXd X = sample_standardized(state.range(0), state.range(0) / 10, FeatureLaw::gaussian, 4);
  for (auto _ : state) benchmark::DoNotOptimize(lambda_bar_data(X, state.range(0) / 20, 20, 5));
}
BENCHMARK(BM_LambdaBarData)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_MonotonicityScan(benchmark::State& state) {
  const SpectralDistribution h = SpectralDistribution::point_mass(1.0);
  const LimitSpec lim{h, h, 1.0, 1.0};
  const std::vector<double> phis{0.1, 0.5, 1.0, 1.5};
  for (auto _ : state) benchmark::DoNotOptimize(monotonicity_scan(phis, lim).max_gap);
}
BENCHMARK(BM_MonotonicityScan)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
