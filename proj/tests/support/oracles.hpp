// Brute-force reference implementations used by the tests. They share no
// code with the library beyond the Image container and loop directly over
// pixels, so agreement is meaningful.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdmae/image.hpp"

namespace oracle {

using sdmae::Image;

// m_i: for each patch (row-major), mean over channels of the channel max.
inline std::vector<double> motion_stats(const Image& g, int d) {
  std::vector<double> m;
  for (int pr = 0; pr < g.height() / d; ++pr)
    for (int pc = 0; pc < g.width() / d; ++pc) {
      double total = 0.0;
      for (int ch = 0; ch < g.channels(); ++ch) {
        double best = -1e300;
        for (int y = pr * d; y < pr * d + d; ++y)
          for (int x = pc * d; x < pc * d + d; ++x) best = std::max(best, g.at(y, x, ch));
        total += best;
      }
      m.push_back(total / g.channels());
    }
  return m;
}

inline std::vector<double> normalise(const std::vector<double>& m) {
  double s = 0.0;
  for (double v : m) s += v;
  std::vector<double> w(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) w[i] = s == 0.0 ? 1.0 / m.size() : m[i] / s;
  return w;
}

// (1/n) sum_i w_i sum over the patch's pixels and channels of (a - b)^2,
// computed on full images rather than patch rows.
inline double weighted_image_loss(const Image& a, const Image& b, const std::vector<double>& w, int d) {
  const int gw = a.width() / d;
  const int n = (a.height() / d) * gw;
  double loss = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int ch = 0; ch < a.channels(); ++ch) {
        const double diff = a.at(y, x, ch) - b.at(y, x, ch);
        loss += w[static_cast<std::size_t>((y / d) * gw + x / d)] * diff * diff;
      }
  return loss / n;
}

// Per-pixel anomaly map for a strategy given as term switches.
inline Image score_map(const Image& x, const Image& t, const Image& s, bool use_t, bool use_s, bool use_tsd,
                       const Image* predicted) {
  Image out(x.height(), x.width(), 1);
  for (int y = 0; y < x.height(); ++y)
    for (int c = 0; c < x.width(); ++c) {
      double v = 0.0;
      for (int ch = 0; ch < x.channels(); ++ch) {
        if (use_t) v += std::pow(x.at(y, c, ch) - t.at(y, c, ch), 2);
        if (use_s) v += std::pow(x.at(y, c, ch) - s.at(y, c, ch), 2);
        if (use_tsd) v += std::pow(t.at(y, c, ch) - s.at(y, c, ch), 2);
      }
      if (predicted) {
        double a = predicted->at(y, c);
        a = a < 0 ? 0 : (a > 1 ? 1 : a);
        v += a * a;
      }
      out.at(y, c) = v;
    }
  return out;
}

// Direct (kt x kh x kw) window average with clamped coordinates.
inline std::vector<Image> mean_filter_3d(const std::vector<Image>& v, int kt, int kh, int kw) {
  const int T = static_cast<int>(v.size());
  const int H = v[0].height();
  const int W = v[0].width();
  auto clampi = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
  std::vector<Image> out(v.size(), Image(H, W, 1));
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double s = 0.0;
        for (int a = -kt / 2; a <= kt / 2; ++a)
          for (int b = -kh / 2; b <= kh / 2; ++b)
            for (int c = -kw / 2; c <= kw / 2; ++c) s += v[clampi(t + a, T)].at(clampi(y + b, H), clampi(x + c, W));
        out[t].at(y, x) = s / (kt * kh * kw);
      }
  return out;
}

// Truncated Gaussian (radius ceil(4 sigma)), weights renormalised, clamped ends.
inline std::vector<double> gaussian(const std::vector<double>& v, double sigma) {
  const int r = static_cast<int>(std::ceil(4 * sigma));
  const int n = static_cast<int>(v.size());
  std::vector<double> out(v.size());
  for (int i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (int k = -r; k <= r; ++k) {
      const double w = std::exp(-(k * k) / (2 * sigma * sigma));
      const int j = std::min(std::max(i + k, 0), n - 1);
      num += w * v[j];
      den += w;
    }
    out[i] = num / den;
  }
  return out;
}

// Fraction of (positive, negative) pairs ranked correctly, ties worth 1/2.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        ++pairs;
        if (s[i] > s[j]) good += 1.0;
        else if (s[i] == s[j]) good += 0.5;
      }
  return good / static_cast<double>(pairs);
}

// 3x3 median with clamped borders, one channel at a time.
inline Image median3(const Image& img) {
  Image out(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int ch = 0; ch < img.channels(); ++ch) {
        std::vector<double> win;
        for (int a = -1; a <= 1; ++a)
          for (int b = -1; b <= 1; ++b)
            win.push_back(img.at(std::clamp(y + a, 0, img.height() - 1), std::clamp(x + b, 0, img.width() - 1), ch));
        std::sort(win.begin(), win.end());
        out.at(y, x, ch) = win[4];
      }
  return out;
}

// FNV-1a over every regular file (relative path + bytes), in sorted order.
inline std::uint64_t hash_tree(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& f : files) {
    feed(std::filesystem::relative(f, root).generic_string());
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    feed(ss.str());
  }
  return h;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
