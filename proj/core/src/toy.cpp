#include "sdmae/toy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "sdmae/data.hpp"
#include "sdmae/error.hpp"
#include "sdmae/image.hpp"
#include "sdmae/png_io.hpp"
#include "sdmae/rng.hpp"

namespace fs = std::filesystem;

namespace sdmae {

std::string ToyManifest::to_text() const {
  std::ostringstream os;
  os << "generator = sdmae-toy\n"
     << "seed = " << seed << "\n"
     << "size = " << params.size << "\n"
     << "train_videos = " << params.train_videos << "\n"
     << "test_videos = " << params.test_videos << "\n"
     << "frames_per_video = " << params.frames_per_video << "\n"
     << "bank_events = " << params.bank_events << "\n"
     << "event_frames = " << params.event_frames << "\n"
     << "train_frames = " << train_frames << "\n"
     << "test_frames = " << test_frames << "\n"
     << "abnormal_frames = " << abnormal_frames << "\n";
  return os.str();
}

namespace {

struct Sprite {
  int spawn = 0;     // frame at which the sprite enters
  double start = 0;  // column at spawn
  double speed = 0;  // columns per frame
  int lane_row = 0;  // top row
  int side = 0;
  double value = 0;
};

struct Anomaly {
  int begin = 0;
  int end = 0;  // exclusive
  int top = 0;
  int side = 0;
  double col0 = 0;
  double speed = 0;
  double value = 0;
};

Image make_background(int size, Rng& rng) {
  Image bg(size, size, 1);
  const double p1 = rng.uniform(0, 2 * std::numbers::pi);
  const double p2 = rng.uniform(0, 2 * std::numbers::pi);
  const double f1 = rng.uniform(0.8, 1.4) / 16.0;
  const double f2 = rng.uniform(0.8, 1.4) / 21.0;
  // coarse value noise, bilinearly upsampled
  const int cells = 9;
  std::vector<double> noise(static_cast<std::size_t>(cells * cells));
  for (double& v : noise) v = rng.uniform(-1, 1);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double gy = static_cast<double>(r) / size * (cells - 1);
      const double gx = static_cast<double>(c) / size * (cells - 1);
      const int y0 = static_cast<int>(gy);
      const int x0 = static_cast<int>(gx);
      const double ty = gy - y0;
      const double tx = gx - x0;
      auto n = [&](int y, int x) { return noise[static_cast<std::size_t>(y * cells + x)]; };
      const double smooth = (n(y0, x0) * (1 - tx) + n(y0, x0 + 1) * tx) * (1 - ty) +
                            (n(y0 + 1, x0) * (1 - tx) + n(y0 + 1, x0 + 1) * tx) * ty;
      const double wave = std::sin(2 * std::numbers::pi * r * f1 + p1) *
                          std::cos(2 * std::numbers::pi * c * f2 + p2);
      bg.at(r, c) = std::clamp(0.70 + 0.07 * wave + 0.06 * smooth, 0.0, 1.0);
    }
  }
  return bg;
}

// Draws an axis-aligned filled rectangle; returns false when fully outside.
bool fill_rect(Image& img, BinaryMap* mask, int top, int left, int side, double value) {
  bool drawn = false;
  for (int r = std::max(0, top); r < std::min(img.height(), top + side); ++r)
    for (int c = std::max(0, left); c < std::min(img.width(), left + side); ++c) {
      img.at(r, c) = value;
      if (mask != nullptr) mask->at(r, c) = 1.0;
      drawn = true;
    }
  return drawn;
}

std::vector<int> lane_tops(int size, int sprite) {
  const std::vector<double> centers{size * 3.0 / 16.0, size / 2.0, size * 13.0 / 16.0};
  std::vector<int> tops;
  for (double c : centers) tops.push_back(static_cast<int>(std::lround(c)) - sprite / 2);
  return tops;
}

std::vector<Sprite> schedule_sprites(int size, int frames, Rng& rng) {
  const int side = std::max(2, size * 6 / 64);
  const auto tops = lane_tops(size, side);
  std::vector<Sprite> sprites;
  for (std::size_t lane = 0; lane < tops.size(); ++lane) {
    const double dir = lane % 2 == 0 ? 1.0 : -1.0;
    int t = -rng.between(0, size);
    while (t < frames) {
      Sprite s;
      s.spawn = t;
      s.speed = dir;
      s.start = dir > 0 ? -side : size;
      s.lane_row = tops[lane];
      s.side = side;
      s.value = rng.uniform(0.15, 0.25);
      sprites.push_back(s);
      t += rng.between(24, 56);
    }
  }
  return sprites;
}

std::vector<Anomaly> schedule_anomalies(int size, int frames, Rng& rng) {
  std::vector<Anomaly> out;
  const int dur_lo = std::max(2, frames * 25 / 120);
  const int dur_hi = std::max(dur_lo, frames * 35 / 120);
  const int start_lo = std::max(1, frames / 8);
  const int start_hi = std::max(start_lo, frames / 3);
  const std::vector<double> bands{size * 11.0 / 32.0, size * 21.0 / 32.0};

  auto make = [&](int begin) {
    Anomaly a;
    a.begin = begin;
    a.end = std::min(frames, begin + rng.between(dur_lo, dur_hi));
    a.side = rng.between(std::max(3, size * 12 / 64), std::max(3, size * 14 / 64));
    const double center = bands[rng.below(bands.size())];
    a.top = static_cast<int>(std::lround(center)) - a.side / 2;
    a.col0 = rng.uniform(0, size - a.side);
    a.speed = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(2.5, 3.5);
    a.value = rng.uniform(0.1, 0.3);
    return a;
  };

  out.push_back(make(rng.between(start_lo, start_hi)));
  const int second_lo = out.back().end + std::max(1, frames / 8);
  if (second_lo + dur_lo < frames && rng.bernoulli(0.5)) out.push_back(make(second_lo));
  return out;
}

// Column of a bouncing sprite after `steps` frames.
double bounce(double col0, double speed, int steps, int limit) {
  if (limit <= 0) return 0;
  double x = col0 + speed * steps;
  const double period = 2.0 * limit;
  x = std::fmod(x, period);
  if (x < 0) x += period;
  return x <= limit ? x : period - x;
}

struct RenderedVideo {
  std::vector<Image> frames;
  std::vector<BinaryMap> masks;
  std::vector<int> labels;
};

RenderedVideo render_video(const Image& background, int frames, bool with_anomalies, Rng& rng) {
  const int size = background.height();
  const auto sprites = schedule_sprites(size, frames, rng);
  const auto anomalies = with_anomalies ? schedule_anomalies(size, frames, rng)
                                        : std::vector<Anomaly>{};
  RenderedVideo out;
  for (int t = 0; t < frames; ++t) {
    Image img = background;
    for (const auto& s : sprites) {
      if (t < s.spawn) continue;
      const double col = s.start + s.speed * (t - s.spawn);
      fill_rect(img, nullptr, s.lane_row, static_cast<int>(std::lround(col)), s.side, s.value);
    }
    BinaryMap mask(size, size, 1);
    for (const auto& a : anomalies) {
      if (t < a.begin || t >= a.end) continue;
      const double col = bounce(a.col0, a.speed, t - a.begin, size - a.side);
      fill_rect(img, &mask, a.top, static_cast<int>(std::lround(col)), a.side, a.value);
    }
    // Quantise to what the PNG round trip will store.
    for (double& v : img.data()) v = std::round(v * 255.0) / 255.0;
    out.labels.push_back(count_nonzero(mask) > 0 ? 1 : 0);
    out.frames.push_back(std::move(img));
    out.masks.push_back(std::move(mask));
  }
  return out;
}

// Shape support inside a square crop of side `n`; kind cycles through
// disk, ring, cross, diamond, triangle.
bool shape_contains(int kind, int n, double grow, int r, int c) {
  const double cy = (n - 1) / 2.0;
  const double cx = (n - 1) / 2.0;
  const double radius = n / 2.0 - 0.5 - (1.0 - grow);
  const double dy = r - cy;
  const double dx = c - cx;
  switch (kind % 5) {
    case 0: return dx * dx + dy * dy <= radius * radius;
    case 1: {
      const double d = std::sqrt(dx * dx + dy * dy);
      return d <= radius && d >= radius * 0.55;
    }
    case 2: {
      const double arm = std::max(1.0, n / 6.0);
      return (std::abs(dx) <= arm || std::abs(dy) <= arm) && std::abs(dx) <= radius &&
             std::abs(dy) <= radius;
    }
    case 3: return std::abs(dx) + std::abs(dy) <= radius;
    default: {
      // upward triangle
      const double top = cy - radius;
      const double h = 2 * radius;
      if (dy + cy < top || dy + cy > top + h) return false;
      const double half = (r - top) / h * radius;
      return std::abs(dx) <= half;
    }
  }
}

OverlayEvent make_event(int index, int size, int frames, Rng& rng) {
  OverlayEvent ev;
  char id[32];
  std::snprintf(id, sizeof(id), "event_%02d", index + 1);
  ev.event_id = id;
  const int n = rng.between(std::max(4, size * 10 / 64), std::max(4, size * 18 / 64));
  const double value = rng.uniform(0.05, 0.35);
  const double phase = rng.uniform(0, 2 * std::numbers::pi);
  for (int t = 0; t < frames; ++t) {
    const double grow = 0.5 + 0.5 * std::sin(phase + t * 0.7);
    Image clip(n, n, 1, 0.5);
    BinaryMap mask(n, n, 1);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (shape_contains(index, n, grow, r, c)) {
          clip.at(r, c) = std::round(value * 255.0) / 255.0;
          mask.at(r, c) = 1.0;
        }
    if (count_nonzero(mask) == 0) mask.at(n / 2, n / 2) = 1.0;
    ev.clip.push_back(std::move(clip));
    ev.masks.push_back(std::move(mask));
  }
  return ev;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string video_name(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%02d", prefix, index + 1);
  return buf;
}

}  // namespace

ToyManifest generate_toy_dataset(const fs::path& out, const ToyParams& params, std::uint64_t seed) {
  if (params.size < 16) throw ConfigError("toy size must be >= 16");
  if (params.frames_per_video < 4) throw ConfigError("toy frames_per_video must be >= 4");
  if (params.train_videos < 1 || params.test_videos < 1)
    throw ConfigError("toy dataset needs at least one train and one test video");
  if (params.bank_events < 1 || params.event_frames < 2)
    throw ConfigError("toy event bank needs >= 1 event with >= 2 frames");

  ensure_dir(out);
  ToyManifest manifest;
  manifest.params = params;
  manifest.seed = seed;

  Rng scene_rng(mix_seed(seed));
  const Image background = make_background(params.size, scene_rng);

  for (int v = 0; v < params.train_videos; ++v) {
    const std::string id = video_name("train", v);
    Rng rng(mix_seed(seed ^ fnv1a(id)));
    const auto video = render_video(background, params.frames_per_video, false, rng);
    const fs::path dir = out / "train" / id;
    ensure_dir(dir);
    for (std::size_t t = 0; t < video.frames.size(); ++t)
      write_png(dir / frame_file_name(static_cast<int>(t)), video.frames[t]);
    manifest.train_frames += static_cast<int>(video.frames.size());
  }

  ensure_dir(out / "test_labels");
  for (int v = 0; v < params.test_videos; ++v) {
    const std::string id = video_name("test", v);
    Rng rng(mix_seed(seed ^ fnv1a(id)));
    const auto video = render_video(background, params.frames_per_video, true, rng);
    const fs::path dir = out / "test" / id;
    const fs::path mask_dir = out / "test_masks" / id;
    ensure_dir(dir);
    ensure_dir(mask_dir);
    for (std::size_t t = 0; t < video.frames.size(); ++t) {
      write_png(dir / frame_file_name(static_cast<int>(t)), video.frames[t]);
      write_png(mask_dir / frame_file_name(static_cast<int>(t)), video.masks[t]);
    }
    write_labels(out / "test_labels" / (id + ".txt"), video.labels);
    manifest.test_frames += static_cast<int>(video.frames.size());
    for (int l : video.labels) manifest.abnormal_frames += l;
  }

  Rng bank_rng(mix_seed(seed ^ fnv1a("bank")));
  for (int e = 0; e < params.bank_events; ++e) {
    const auto ev = make_event(e, params.size, params.event_frames, bank_rng);
    const fs::path dir = out / "bank" / ev.event_id;
    ensure_dir(dir / "frames");
    ensure_dir(dir / "masks");
    for (std::size_t t = 0; t < ev.clip.size(); ++t) {
      write_png(dir / "frames" / frame_file_name(static_cast<int>(t)), ev.clip[t]);
      write_png(dir / "masks" / frame_file_name(static_cast<int>(t)), ev.masks[t]);
    }
  }
  manifest.bank_events = params.bank_events;

  std::ofstream mf(out / "manifest.txt", std::ios::binary);
  if (!mf) throw IoError("cannot write " + (out / "manifest.txt").string());
  mf << manifest.to_text();
  return manifest;
}

}  // namespace sdmae
