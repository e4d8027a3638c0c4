#pragma once

#include <atomic>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <string>

#include "sdmae/config.hpp"
#include "sdmae/image.hpp"
#include "sdmae/rng.hpp"

namespace testing_support {

inline sdmae::Image random_image(int h, int w, int c, sdmae::Rng& rng, double lo = 0.0, double hi = 1.0) {
  sdmae::Image img(h, w, c);
  for (double& v : img.data()) v = rng.uniform(lo, hi);
  return img;
}

// 8x8 frames, patch 4, width 8 everywhere, one block per stack.
inline sdmae::ExperimentConfig micro_config() {
  sdmae::ExperimentConfig cfg = sdmae::toy_preset();
  cfg.frame_height = 8;
  cfg.frame_width = 8;
  cfg.patch_size = 4;
  cfg.channels = 1;
  cfg.encoder_dim = 8;
  cfg.decoder_dim = 8;
  cfg.attention_heads = 2;
  cfg.mlp_ratio = 2;
  cfg.encoder_blocks = 1;
  cfg.teacher_decoder_blocks = 1;
  cfg.student_decoder_blocks = 1;
  cfg.batch_size = 2;
  cfg.smooth_kernel = {3, 3, 3};
  cfg.gaussian_sigma = 1.0;
  return cfg;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sdmae_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support

#include "sdmae/toy.hpp"

namespace testing_support {

/// Default toy dataset (seed 7), generated once per test process.
inline const std::filesystem::path& shared_toy() {
  static TempDir dir("toy");
  static bool made = false;
  if (!made) {
    sdmae::generate_toy_dataset(dir.path(), sdmae::ToyParams{}, 7);
    made = true;
  }
  return dir.path();
}

}  // namespace testing_support
