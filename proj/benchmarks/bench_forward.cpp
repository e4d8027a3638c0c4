#include <benchmark/benchmark.h>

#include <vector>

#include "sdmae/infer.hpp"
#include "sdmae/model.hpp"
#include "sdmae/rng.hpp"

namespace {

std::vector<sdmae::Frame> synthetic_frames(const sdmae::ExperimentConfig& cfg, int n) {
  sdmae::Rng rng(3);
  std::vector<sdmae::Frame> frames;
  for (int i = 0; i < n; ++i) {
    sdmae::Image img(cfg.frame_height, cfg.frame_width, cfg.channels);
    for (double& v : img.data()) v = rng.uniform();
    frames.push_back({std::move(img), i});
  }
  return frames;
}

// forward + anomaly map for `batch` frames per call; items are frames
void BM_ToyForward(benchmark::State& state) {
  const auto cfg = sdmae::toy_preset();
  const auto params = sdmae::init_model(cfg, 1);
  const int batch = static_cast<int>(state.range(0));
  const auto frames = synthetic_frames(cfg, batch);
  for (auto _ : state) benchmark::DoNotOptimize(sdmae::raw_anomaly_maps(params, frames, "bench", cfg, batch));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ToyForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

// full-size configuration, one frame
void BM_FullForward(benchmark::State& state) {
  const auto cfg = sdmae::full_defaults();
  const auto params = sdmae::init_model(cfg, 1);
  const auto frames = synthetic_frames(cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sdmae::raw_anomaly_maps(params, frames, "bench", cfg, 1));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FullForward)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
