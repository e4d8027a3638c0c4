#include "sdmae/infer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sdmae/error.hpp"
#include "sdmae/rng.hpp"

namespace sdmae {

ScoreMap anomaly_map(const Image& frame, const Image& teacher, const Image& student,
                     ScoreStrategy strategy, const Image* predicted_map) {
  if (!frame.same_shape(teacher) || !frame.same_shape(student))
    throw ShapeError("anomaly_map: frame and reconstructions differ in shape");
  if (predicted_map != nullptr && (!frame.same_spatial(*predicted_map) || predicted_map->channels() != 1))
    throw ShapeError("anomaly_map: predicted map does not match the frame");
  const bool teacher_err = true;
  const bool student_err = strategy == ScoreStrategy::T_S || strategy == ScoreStrategy::T_S_TSD;
  const bool discrepancy = strategy == ScoreStrategy::T_TSD || strategy == ScoreStrategy::T_S_TSD;

  ScoreMap out{Image(frame.height(), frame.width(), 1), 0};
  for (int r = 0; r < frame.height(); ++r) {
    for (int c = 0; c < frame.width(); ++c) {
      double v = 0.0;
      for (int ch = 0; ch < frame.channels(); ++ch) {
        const double x = frame.at(r, c, ch);
        const double t = teacher.at(r, c, ch);
        const double s = student.at(r, c, ch);
        if (teacher_err) v += (x - t) * (x - t);
        if (student_err) v += (x - s) * (x - s);
        if (discrepancy) v += (t - s) * (t - s);
      }
      if (predicted_map != nullptr) {
        const double a = std::clamp(predicted_map->at(r, c), 0.0, 1.0);
        v += a * a;
      }
      out.values.at(r, c) = v;
    }
  }
  return out;
}

namespace {

// Box mean along one axis of a (T x H x W) volume with clamped indexing.
void box_axis(std::vector<double>& vol, int T, int H, int W, int axis, int radius) {
  if (radius == 0) return;
  const int dims[3] = {T, H, W};
  const std::size_t strides[3] = {static_cast<std::size_t>(H) * W, static_cast<std::size_t>(W), 1};
  const int len = dims[axis];
  const std::size_t stride = strides[axis];
  const double norm = 1.0 / (2 * radius + 1);
  std::vector<double> line(static_cast<std::size_t>(len));
  // iterate over every line parallel to `axis`
  for (int a = 0; a < dims[(axis + 1) % 3]; ++a) {
    for (int b = 0; b < dims[(axis + 2) % 3]; ++b) {
      std::size_t base = 0;
      base += static_cast<std::size_t>(a) * strides[(axis + 1) % 3];
      base += static_cast<std::size_t>(b) * strides[(axis + 2) % 3];
      for (int i = 0; i < len; ++i) line[i] = vol[base + i * stride];
      for (int i = 0; i < len; ++i) {
        double s = 0.0;
        for (int k = -radius; k <= radius; ++k) s += line[std::clamp(i + k, 0, len - 1)];
        vol[base + i * stride] = s * norm;
      }
    }
  }
}

}  // namespace

std::vector<ScoreMap> smooth_volume(std::span<const ScoreMap> maps, std::array<int, 3> kernel) {
  if (maps.empty()) throw ShapeError("smooth_volume: no maps");
  for (int k : kernel)
    if (k < 1 || k % 2 == 0) throw ConfigError("smooth_volume: kernel entries must be odd and >= 1");
  const int T = static_cast<int>(maps.size());
  const int H = maps[0].values.height();
  const int W = maps[0].values.width();
  std::vector<double> vol(static_cast<std::size_t>(T) * H * W);
  for (int t = 0; t < T; ++t) {
    if (maps[t].values.height() != H || maps[t].values.width() != W || maps[t].values.channels() != 1)
      throw ShapeError("smooth_volume: maps differ in shape");
    std::copy(maps[t].values.data().begin(), maps[t].values.data().end(),
              vol.begin() + static_cast<std::ptrdiff_t>(t) * H * W);
  }
  // a clamped box filter is separable
  for (int axis = 0; axis < 3; ++axis) box_axis(vol, T, H, W, axis, kernel[axis] / 2);
  std::vector<ScoreMap> out;
  out.reserve(maps.size());
  for (int t = 0; t < T; ++t) {
    ScoreMap m{Image(H, W, 1), maps[t].index};
    std::copy(vol.begin() + static_cast<std::ptrdiff_t>(t) * H * W,
              vol.begin() + static_cast<std::ptrdiff_t>(t + 1) * H * W, m.values.data().begin());
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<double> gaussian_smooth(std::span<const double> values, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * (k / sigma) * (k / sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;
  const int len = static_cast<int>(values.size());
  std::vector<double> out(values.size());
  for (int i = 0; i < len; ++i) {
    double s = 0.0;
    for (int k = -radius; k <= radius; ++k)
      s += kernel[static_cast<std::size_t>(k + radius)] * values[std::clamp(i + k, 0, len - 1)];
    out[i] = s;
  }
  return out;
}

ScoreSeries frame_scores(std::span<const ScoreMap> maps, double sigma) {
  if (maps.empty()) throw ShapeError("frame_scores: no maps");
  if (!(sigma > 0.0)) throw ConfigError("frame_scores: sigma must be positive");
  ScoreSeries s;
  s.raw.reserve(maps.size());
  for (const auto& m : maps) {
    const auto d = m.values.data();
    s.raw.push_back(*std::max_element(d.begin(), d.end()));
  }
  s.smoothed = gaussian_smooth(s.raw, sigma);
  return s;
}

MaskPlan inference_plan(const ExperimentConfig& cfg, const std::string& video_id, int t) {
  std::uint64_t h = fnv1a(video_id, mix_seed(cfg.seed ^ 0x696e666572ULL));
  h = mix_seed(h ^ static_cast<std::uint64_t>(t));
  Rng rng(h);
  return sample_mask(cfg.token_count(), cfg.inference_mask_ratio, rng);
}

std::vector<ScoreMap> raw_anomaly_maps(const ModelParams& params, std::span<const Frame> frames,
                                       const std::string& video_id, const ExperimentConfig& cfg,
                                       int batch) {
  const int n = cfg.token_count();
  const int d = cfg.patch_size;
  const int c = cfg.channels;
  const int gh = cfg.grid_height();
  const int gw = cfg.grid_width();
  const bool need_student = uses_student(cfg.score_strategy);
  batch = std::max(1, batch);

  std::vector<ScoreMap> maps;
  maps.reserve(frames.size());
  for (std::size_t start = 0; start < frames.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t stop = std::min(frames.size(), start + static_cast<std::size_t>(batch));
    const auto count = static_cast<Eigen::Index>(stop - start);
    Tensor patches(count * n, d * d * c);
    std::vector<MaskPlan> plans;
    for (std::size_t i = start; i < stop; ++i) {
      const Frame& f = frames[i];
      if (f.pixels.height() != cfg.frame_height || f.pixels.width() != cfg.frame_width ||
          f.pixels.channels() != c)
        throw ShapeError("video '" + video_id + "' frame " + std::to_string(i) +
                         " does not match the configuration");
      patches.middleRows(static_cast<Eigen::Index>(i - start) * n, n) = patchify(f.pixels, d).data;
      plans.push_back(inference_plan(cfg, video_id, f.index));
    }
    const ForwardOutput out = forward_batch(params, patches, plans, nullptr, need_student);
    for (Eigen::Index b = 0; b < count; ++b) {
      const Frame& f = frames[start + static_cast<std::size_t>(b)];
      PatchGrid tg{gh, gw, d, cfg.output_channels(), out.teacher.middleRows(b * n, n)};
      const Image teacher_full = unpatchify(tg);
      const Image teacher = slice_channels(teacher_full, 0, c);
      Image student = teacher;
      if (need_student) {
        PatchGrid sg{gh, gw, d, cfg.output_channels(), out.student.middleRows(b * n, n)};
        student = slice_channels(unpatchify(sg), 0, c);
      }
      Image predicted;
      if (cfg.predict_anomaly_map) predicted = slice_channels(teacher_full, c, 1);
      ScoreMap m = anomaly_map(f.pixels, teacher, student, cfg.score_strategy,
                               cfg.predict_anomaly_map ? &predicted : nullptr);
      m.index = f.index;
      maps.push_back(std::move(m));
    }
  }
  return maps;
}

VideoScores score_video(const ModelParams& params, const VideoSequence& video,
                        const ExperimentConfig& cfg, const ScoreOptions& options) {
  validate_config(cfg);
  if (params.fingerprint != config_fingerprint(cfg))
    throw ConfigError("score_video: model was built for a different configuration");
  if (uses_student(cfg.score_strategy) && params.stage != Stage::student && !options.allow_untrained)
    throw TrainingError("strategy " + std::string(to_string(cfg.score_strategy)) +
                        " needs a distilled student, but the model stage is '" +
                        std::string(to_string(params.stage)) + "'");
  if (video.frames.empty()) throw DataError("video '" + video.video_id + "' has no frames");

  const auto maps = raw_anomaly_maps(params, video.frames, video.video_id, cfg, options.batch);
  VideoScores result;
  result.maps = smooth_volume(maps, cfg.smooth_kernel);
  result.series = frame_scores(result.maps, cfg.gaussian_sigma);
  result.series.video_id = video.video_id;
  return result;
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Region> localize(const ScoreMap& map, int patch_size, double threshold) {
  const Image& v = map.values;
  const int d = patch_size;
  if (d < 1 || v.height() % d != 0 || v.width() % d != 0)
    throw ShapeError("localize: map not divisible by patch size");
  if (!(threshold >= 0.0)) throw ConfigError("localize: threshold must be >= 0");
  const int gh = v.height() / d;
  const int gw = v.width() / d;
  std::vector<char> hot(static_cast<std::size_t>(gh * gw), 0);
  for (int pr = 0; pr < gh; ++pr)
    for (int pc = 0; pc < gw; ++pc) {
      double s = 0.0;
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) s += v.at(pr * d + j, pc * d + k);
      hot[static_cast<std::size_t>(pr * gw + pc)] = s / (d * d) > threshold ? 1 : 0;
    }

  std::vector<Region> regions;
  std::vector<char> seen(hot.size(), 0);
  std::vector<int> stack;
  for (int start = 0; start < gh * gw; ++start) {
    if (!hot[start] || seen[start]) continue;
    std::vector<Point2> corners;
    Region region;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      const int pr = cell / gw;
      const int pc = cell % gw;
      ++region.patches;
      for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx)
          corners.push_back({static_cast<double>((pc + dx) * d), static_cast<double>((pr + dy) * d)});
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nr = pr + dy;
          const int nc = pc + dx;
          if (nr < 0 || nc < 0 || nr >= gh || nc >= gw) continue;
          const int nb = nr * gw + nc;
          if (hot[nb] && !seen[nb]) {
            seen[nb] = 1;
            stack.push_back(nb);
          }
        }
    }
    region.hull = convex_hull(std::move(corners));
    double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
    for (const auto& p : region.hull) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    region.x0 = static_cast<int>(x0);
    region.y0 = static_cast<int>(y0);
    region.x1 = static_cast<int>(x1);
    region.y1 = static_cast<int>(y1);
    regions.push_back(std::move(region));
  }
  return regions;
}

}  // namespace sdmae
