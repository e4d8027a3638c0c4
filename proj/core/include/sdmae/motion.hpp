#pragma once

#include <span>
#include <vector>

#include "sdmae/image.hpp"

namespace sdmae {

/// Non-negative h x w x c map of absolute temporal differences.
struct GradientMap {
  Image values;
  int index = 0;
};

/// Per-token motion statistic m and normalised loss weight w.
struct TokenWeights {
  std::vector<double> m;
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
};

/// Per-channel 3x3 median with edge replication.
Image median_filter3(const Image& image);
Frame median_filter3(const Frame& frame);

/// |median3(cur) - median3(prev)| element-wise.
GradientMap motion_gradient(const Frame& prev, const Frame& cur);

/// All-zero map, used for the first frame of a video.
GradientMap zero_gradient(const Frame& cur);

/// m_i: mean over channels of the per-channel maximum inside each d x d patch.
/// Patches are ordered row-major over the token grid.
std::vector<double> patch_motion_stats(const GradientMap& grad, int patch_size);

/// w_i = m_i / sum(m); uniform 1/n when sum(m) == 0.
TokenWeights token_weights(std::span<const double> m);

/// Uniform weights 1/n with m = 0 (motion weighting disabled).
TokenWeights uniform_weights(std::size_t n);

/// grad + anomaly map broadcast over channels.
GradientMap fuse_anomaly(const GradientMap& grad, const BinaryMap& anomaly_map);

}  // namespace sdmae
