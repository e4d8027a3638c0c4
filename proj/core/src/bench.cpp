#include "sdmae/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "sdmae/error.hpp"
#include "sdmae/infer.hpp"
#include "sdmae/rng.hpp"

namespace sdmae {

namespace {

std::vector<Frame> synthetic_frames(const ExperimentConfig& cfg, int count) {
  Rng rng(mix_seed(cfg.seed ^ 0x62656e6368ULL));
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Frame f{Image(cfg.frame_height, cfg.frame_width, cfg.channels), i};
    for (double& v : f.pixels.data()) v = rng.uniform();
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

double measure_fps(const ModelParams& params, const ExperimentConfig& cfg, int n_frames, int batch) {
  if (n_frames < 100) throw ConfigError("measure_fps: n_frames must be >= 100");
  if (batch < 1) throw ConfigError("measure_fps: batch must be >= 1");
  const auto frames = synthetic_frames(cfg, n_frames);
  const std::span<const Frame> all(frames);

  // warm-up: ten batches, cycling through the frames
  for (int i = 0; i < 10; ++i) {
    const std::size_t start = (static_cast<std::size_t>(i) * batch) % frames.size();
    const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(batch), frames.size() - start);
    (void)raw_anomaly_maps(params, all.subspan(start, len), "bench", cfg, batch);
  }

  std::vector<double> rates;
  for (int rep = 0; rep < 5; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto maps = raw_anomaly_maps(params, all, "bench", cfg, batch);
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    rates.push_back(static_cast<double>(maps.size()) / std::max(secs, 1e-12));
  }
  std::nth_element(rates.begin(), rates.begin() + 2, rates.end());
  return rates[2];
}

std::string environment_note() {
  std::ostringstream out;
  out << "cpu threads " << std::thread::hardware_concurrency() << ", eigen threads " << Eigen::nbThreads()
      << ", double precision";
#if defined(__VERSION__)
  out << ", compiler " << __VERSION__;
#endif
  return out.str();
}

BenchReport run_bench(const ModelParams& params, const ExperimentConfig& cfg, int n_frames, int batch_n) {
  BenchReport r;
  r.frames = n_frames;
  r.batch_n = batch_n;
  r.fps_batch1 = measure_fps(params, cfg, n_frames, 1);
  r.fps_batchN = measure_fps(params, cfg, n_frames, batch_n);
  r.param_count = count_parameters(params);
  r.flops_per_frame = estimate_flops(cfg);
  r.environment = environment_note();
  return r;
}

std::string format_bench(const BenchReport& r, const ExperimentConfig& cfg) {
  char buf[160];
  std::ostringstream out;
  out << "frame " << cfg.frame_height << "x" << cfg.frame_width << "x" << cfg.channels << ", patch "
      << cfg.patch_size << ", dims " << cfg.encoder_dim << "/" << cfg.decoder_dim << ", blocks "
      << cfg.encoder_blocks << "+" << cfg.teacher_decoder_blocks << "+" << cfg.student_decoder_blocks << "\n";
  std::snprintf(buf, sizeof buf, "params        %zu (%.3f M)   reference 3 M\n", r.param_count, r.param_count / 1e6);
  out << buf;
  std::snprintf(buf, sizeof buf, "GFLOPs/frame  %.4f   reference 0.8\n", r.flops_per_frame / 1e9);
  out << buf;
  std::snprintf(buf, sizeof buf, "fps batch 1   %.2f\n", r.fps_batch1);
  out << buf;
  std::snprintf(buf, sizeof buf, "fps batch %-3d %.2f\n", r.batch_n, r.fps_batchN);
  out << buf;
  out << "frames timed  " << r.frames << " per repetition, median of 5, 10 warm-up batches\n";
  out << "protocol      forward pass + anomaly map; excludes disk I/O and score smoothing\n";
  out << "environment   " << r.environment << "\n";
  return out.str();
}

}  // namespace sdmae
