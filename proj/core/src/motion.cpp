#include "sdmae/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "sdmae/error.hpp"

namespace sdmae {

Image median_filter3(const Image& image) {
  const int h = image.height();
  const int w = image.width();
  Image out(h, w, image.channels());
  std::array<double, 9> window{};
  for (int ch = 0; ch < image.channels(); ++ch) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        int k = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = std::clamp(r + dr, 0, h - 1);
          for (int dc = -1; dc <= 1; ++dc)
            window[k++] = image.at(rr, std::clamp(c + dc, 0, w - 1), ch);
        }
        std::nth_element(window.begin(), window.begin() + 4, window.end());
        out.at(r, c, ch) = window[4];
      }
    }
  }
  return out;
}

Frame median_filter3(const Frame& frame) { return Frame{median_filter3(frame.pixels), frame.index}; }

GradientMap motion_gradient(const Frame& prev, const Frame& cur) {
  if (!prev.pixels.same_shape(cur.pixels))
    throw ShapeError("motion_gradient: frame dims differ");
  const Image a = median_filter3(prev.pixels);
  const Image b = median_filter3(cur.pixels);
  GradientMap g{Image(a.height(), a.width(), a.channels()), cur.index};
  auto out = g.values.data();
  auto pa = a.data();
  auto pb = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(pb[i] - pa[i]);
  return g;
}

GradientMap zero_gradient(const Frame& cur) {
  return GradientMap{Image(cur.pixels.height(), cur.pixels.width(), cur.pixels.channels()),
                     cur.index};
}

std::vector<double> patch_motion_stats(const GradientMap& grad, int patch_size) {
  const Image& g = grad.values;
  const int d = patch_size;
  if (d < 1 || g.height() % d != 0 || g.width() % d != 0)
    throw ShapeError("patch_motion_stats: " + std::to_string(g.height()) + "x" +
                     std::to_string(g.width()) + " not divisible by patch size " +
                     std::to_string(d));
  const int gh = g.height() / d;
  const int gw = g.width() / d;
  const int c = g.channels();
  std::vector<double> m(static_cast<std::size_t>(gh * gw), 0.0);
  std::vector<double> peak(static_cast<std::size_t>(c));
  for (int pr = 0; pr < gh; ++pr) {
    for (int pc = 0; pc < gw; ++pc) {
      std::fill(peak.begin(), peak.end(), -INFINITY);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < c; ++l)
            peak[l] = std::max(peak[l], g.at(pr * d + j, pc * d + k, l));
      m[static_cast<std::size_t>(pr * gw + pc)] =
          std::accumulate(peak.begin(), peak.end(), 0.0) / c;
    }
  }
  return m;
}

TokenWeights token_weights(std::span<const double> m) {
  if (m.empty()) throw ShapeError("token_weights: empty statistics");
  TokenWeights tw;
  tw.m.assign(m.begin(), m.end());
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(m[i] >= 0.0))
      throw ShapeError("token_weights: m[" + std::to_string(i) + "] is negative");
    total += m[i];
  }
  tw.w.resize(m.size());
  if (total == 0.0) {
    std::fill(tw.w.begin(), tw.w.end(), 1.0 / static_cast<double>(m.size()));
  } else {
    for (std::size_t i = 0; i < m.size(); ++i) tw.w[i] = m[i] / total;
  }
  return tw;
}

TokenWeights uniform_weights(std::size_t n) {
  TokenWeights tw;
  tw.m.assign(n, 0.0);
  tw.w.assign(n, 1.0 / static_cast<double>(n));
  return tw;
}

GradientMap fuse_anomaly(const GradientMap& grad, const BinaryMap& anomaly_map) {
  const Image& g = grad.values;
  if (!g.same_spatial(anomaly_map) || anomaly_map.channels() != 1)
    throw ShapeError("fuse_anomaly: anomaly map dims differ from gradient map");
  GradientMap out = grad;
  for (int r = 0; r < g.height(); ++r)
    for (int c = 0; c < g.width(); ++c) {
      const double a = anomaly_map.at(r, c);
      if (a == 0.0) continue;
      for (int ch = 0; ch < g.channels(); ++ch) out.values.at(r, c, ch) += a;
    }
  return out;
}

}  // namespace sdmae
