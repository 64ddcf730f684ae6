#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>
#include <random>

#include "asrfeat/features.hpp"
#include "asrfeat/gcu_net.hpp"
#include "asrfeat/mfcc.hpp"
#include "asrfeat/regression.hpp"
#include "asrfeat/weight_io.hpp"

using namespace asrfeat;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  const auto v = noise(rows * cols, seed);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

void BM_Mfcc(benchmark::State& state) {
  const MfccExtractor ex{MfccConfig{}};
  const AudioBuffer audio{noise(static_cast<std::size_t>(state.range(0)) * 16, 1), 16000, "bench"};
  for (auto _ : state) benchmark::DoNotOptimize(ex.compute(audio));
  state.SetLabel(std::to_string(state.range(0)) + " ms of audio");
}
BENCHMARK(BM_Mfcc)->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_DilatedConv(benchmark::State& state) {
  ConvWeights w(128, 128, 7);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-0.03f, 0.03f);
  for (auto& v : w.weight) v = u(rng);
  const Matrix x = random_matrix(128, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(dilated_conv(x, w, 4));
}
BENCHMARK(BM_DilatedConv)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_ForwardCollect(benchmark::State& state) {
  const ModelConfig cfg;
  const WeightSet w = synth_weights(cfg, 42);
  MfccSequence seq;
  seq.coeffs = random_matrix(20, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(mean_pool(forward_collect(cfg, w, seq)));
  state.SetLabel(std::to_string(state.range(0)) + " frames");
}
BENCHMARK(BM_ForwardCollect)->Arg(51)->Arg(301)->Unit(benchmark::kMillisecond);

void BM_FScores(benchmark::State& state) {
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), 1920, 5);
  const auto y = noise(x.rows(), 6);
  for (auto _ : state) benchmark::DoNotOptimize(univariate_f_scores(x, y));
}
BENCHMARK(BM_FScores)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_SelectedRegression(benchmark::State& state) {
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), 1920, 7);
  const auto y = noise(x.rows(), 8);
  std::vector<std::size_t> candidates(1920);
  std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  for (auto _ : state) benchmark::DoNotOptimize(fit_selected_regression(x, y, 100, candidates));
}
BENCHMARK(BM_SelectedRegression)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
