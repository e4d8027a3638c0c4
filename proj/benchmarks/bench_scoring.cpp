#include <benchmark/benchmark.h>

#include <vector>

#include "sdmae/eval.hpp"
#include "sdmae/infer.hpp"
#include "sdmae/rng.hpp"

namespace {

void BM_SmoothVolume(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  sdmae::Rng rng(1);
  std::vector<sdmae::ScoreMap> maps;
  for (int t = 0; t < 32; ++t) {
    sdmae::Image img(side, side, 1);
    for (double& v : img.data()) v = rng.uniform();
    maps.push_back({std::move(img), t});
  }
  for (auto _ : state) benchmark::DoNotOptimize(sdmae::smooth_volume(maps, {5, 5, 5}));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_SmoothVolume)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  sdmae::Rng rng(2);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.3) ? 1 : 0;
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sdmae::roc_auc(scores, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->Complexity(benchmark::oNLogN);

}  // namespace
