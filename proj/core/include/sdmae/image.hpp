#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sdmae {

/// Dense h x w x c array of reals, interleaved channels, row-major.
class Image {
public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  double at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool same_spatial(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const Image&) const = default;

private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// One video frame; pixels in [0, 1].
struct Frame {
  Image pixels;
  int index = 0;
};

/// Single-channel {0,1} map (anomaly maps, event masks, pixel ground truth).
using BinaryMap = Image;

/// Bilinear resize (pixel-center aligned).
Image resize_bilinear(const Image& src, int height, int width);

/// Nearest-neighbour resize; preserves {0,1} maps.
Image resize_nearest(const Image& src, int height, int width);

/// Converts between 1 and 3 channels (luma for RGB->gray, replication for gray->RGB).
Image convert_channels(const Image& src, int channels);

/// Stacks `b` as extra channels after `a`; spatial dims must match.
Image concat_channels(const Image& a, const Image& b);

/// Copies channels [first, first + count).
Image slice_channels(const Image& src, int first, int count);

/// Number of nonzero entries.
std::size_t count_nonzero(const Image& img);

}  // namespace sdmae
