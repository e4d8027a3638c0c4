#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sdmae/config.hpp"
#include "sdmae/image.hpp"

namespace sdmae {

struct VideoSequence {
  std::string video_id;
  std::vector<Frame> frames;                 ///< ordered by Frame::index
  std::optional<std::vector<int>> labels;    ///< per-frame 0/1, test split only
  std::optional<std::vector<BinaryMap>> pixel_masks;

  std::size_t size() const { return frames.size(); }
};

/// A cropped abnormal clip with its pixel masks, used for compositing.
struct OverlayEvent {
  std::string event_id;
  std::vector<Image> clip;
  std::vector<BinaryMap> masks;  ///< same length and spatial dims as clip

  std::size_t size() const { return clip.size(); }
};

struct Dataset {
  std::vector<VideoSequence> train;
  std::vector<VideoSequence> test;
  std::vector<std::string> warnings;
};

/// Loads `root/train`, `root/test`, `root/test_labels` and optional
/// `root/test_masks`. Frames are converted to cfg.channels, resized to
/// (frame_height, frame_width) and scaled to [0, 1].
Dataset load_dataset(const std::filesystem::path& root, const ExperimentConfig& cfg);

/// Loads one split directory (`train` or `test`) without labels.
std::vector<VideoSequence> load_split(const std::filesystem::path& split_dir,
                                      const ExperimentConfig& cfg);

/// Reads one 0/1 value per line.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

/// Loads `bank/<event_id>/frames/*.png` and `bank/<event_id>/masks/*.png`.
/// Clips keep their stored channel count and size.
std::vector<OverlayEvent> load_event_bank(const std::filesystem::path& root);

/// Checks clip/mask alignment and rejects empty masks.
void validate_event(const OverlayEvent& event);

/// Sorted `*.png` files of a directory.
std::vector<std::filesystem::path> list_png(const std::filesystem::path& dir);

/// Six-digit zero-padded frame file name, e.g. "000042.png".
std::string frame_file_name(int index);

}  // namespace sdmae
