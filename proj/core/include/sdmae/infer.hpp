#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sdmae/config.hpp"
#include "sdmae/data.hpp"
#include "sdmae/image.hpp"
#include "sdmae/model.hpp"
#include "sdmae/patch.hpp"

namespace sdmae {

/// Non-negative per-pixel anomaly map o_t (h x w x 1).
struct ScoreMap {
  Image values;
  int index = 0;
};

struct ScoreSeries {
  std::string video_id;
  std::vector<double> raw;       ///< max of each smoothed map
  std::vector<double> smoothed;  ///< temporal Gaussian over raw
};

/// Channel-summed squared differences combined per `strategy`.
/// `predicted_map` (teacher anomaly channel), when given, is clamped to
/// [0,1], squared and added.
ScoreMap anomaly_map(const Image& frame, const Image& teacher, const Image& student,
                     ScoreStrategy strategy, const Image* predicted_map = nullptr);

/// 3-D mean filter over (time, row, col) with edge replication.
std::vector<ScoreMap> smooth_volume(std::span<const ScoreMap> maps, std::array<int, 3> kernel);

/// Discrete Gaussian (radius ceil(4 sigma), renormalised, edge-replicated).
std::vector<double> gaussian_smooth(std::span<const double> values, double sigma);

/// raw[t] = max over pixels; smoothed = gaussian_smooth(raw, sigma).
ScoreSeries frame_scores(std::span<const ScoreMap> maps, double sigma);

/// Mask plan for frame t of a video; a pure function of (seed, video_id, t).
MaskPlan inference_plan(const ExperimentConfig& cfg, const std::string& video_id, int t);

struct ScoreOptions {
  int batch = 16;
  /// Permit a strategy that needs the student on a model whose student was
  /// never distilled (used for untrained baselines).
  bool allow_untrained = false;
};

struct VideoScores {
  ScoreSeries series;
  std::vector<ScoreMap> maps;  ///< after 3-D smoothing
};

/// Forward pass and anomaly map for each frame, no smoothing.
std::vector<ScoreMap> raw_anomaly_maps(const ModelParams& params, std::span<const Frame> frames,
                                       const std::string& video_id, const ExperimentConfig& cfg,
                                       int batch);

/// Full per-video pipeline: forward, anomaly map, 3-D smoothing, max, Gaussian.
VideoScores score_video(const ModelParams& params, const VideoSequence& video,
                        const ExperimentConfig& cfg, const ScoreOptions& options = {});

struct Point2 {
  double x = 0;
  double y = 0;
  bool operator==(const Point2&) const = default;
};

/// A connected group of abnormal patches.
struct Region {
  std::vector<Point2> hull;  ///< counter-clockwise convex hull of patch corners
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  ///< bounding box in pixel-corner coordinates
  int patches = 0;
};

/// Convex hull (monotone chain), collinear points dropped.
std::vector<Point2> convex_hull(std::vector<Point2> points);

/// Marks patches whose mean score exceeds `threshold`, groups them by
/// 8-connectivity and returns the hull and box of each group.
std::vector<Region> localize(const ScoreMap& map, int patch_size, double threshold);

}  // namespace sdmae
