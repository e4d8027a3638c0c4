#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace sdmae {

/// Knobs of the synthetic surveillance scene.
struct ToyParams {
  int train_videos = 8;
  int test_videos = 4;
  int frames_per_video = 120;
  int size = 64;          ///< frames are size x size grayscale
  int bank_events = 6;
  int event_frames = 12;

  bool operator==(const ToyParams&) const = default;
};

struct ToyManifest {
  ToyParams params;
  std::uint64_t seed = 0;
  int train_frames = 0;
  int test_frames = 0;
  int abnormal_frames = 0;
  int bank_events = 0;

  std::string to_text() const;
};

/// Writes a deterministic toy dataset plus event bank under `out`:
/// static textured background, slow small sprites on three horizontal lanes,
/// and (test only) fast oversized sprites travelling between lanes.
ToyManifest generate_toy_dataset(const std::filesystem::path& out, const ToyParams& params,
                                 std::uint64_t seed);

}  // namespace sdmae
