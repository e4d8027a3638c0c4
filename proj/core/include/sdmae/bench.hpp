#pragma once

#include <string>

#include "sdmae/config.hpp"
#include "sdmae/model.hpp"

namespace sdmae {

struct BenchReport {
  double fps_batch1 = 0.0;
  double fps_batchN = 0.0;
  int batch_n = 16;
  std::size_t param_count = 0;
  double flops_per_frame = 0.0;
  int frames = 0;
  std::string environment;
};

/// Frames per second of forward pass plus anomaly map on synthetic frames.
/// Ten warm-up batches are run first; the result is the median of five
/// timed repetitions over `n_frames` frames.
double measure_fps(const ModelParams& params, const ExperimentConfig& cfg, int n_frames, int batch);

BenchReport run_bench(const ModelParams& params, const ExperimentConfig& cfg, int n_frames, int batch_n);

/// Plain-text report; published reference values are printed alongside.
std::string format_bench(const BenchReport& report, const ExperimentConfig& cfg);

std::string environment_note();

}  // namespace sdmae
