#include "sdmae/augment.hpp"

#include <algorithm>
#include <cmath>

#include "sdmae/error.hpp"

namespace sdmae {

std::pair<Frame, BinaryMap> composite_event(const Frame& frame, const Image& event_frame,
                                            const BinaryMap& mask, PixelPos position) {
  const Image& px = frame.pixels;
  if (!event_frame.same_spatial(mask) || mask.channels() != 1)
    throw ShapeError("composite_event: event frame and mask dims differ");
  if (position.row < 0 || position.col < 0 ||
      position.row + event_frame.height() > px.height() ||
      position.col + event_frame.width() > px.width())
    throw ShapeError("composite_event: event of size " + std::to_string(event_frame.height()) +
                     "x" + std::to_string(event_frame.width()) + " at (" +
                     std::to_string(position.row) + "," + std::to_string(position.col) +
                     ") does not fit a " + std::to_string(px.height()) + "x" +
                     std::to_string(px.width()) + " frame");

  const Image event = convert_channels(event_frame, px.channels());
  Frame out = frame;
  BinaryMap anomaly(px.height(), px.width(), 1);
  for (int r = 0; r < event.height(); ++r) {
    for (int c = 0; c < event.width(); ++c) {
      if (mask.at(r, c) == 0.0) continue;
      const int fr = position.row + r;
      const int fc = position.col + c;
      for (int ch = 0; ch < px.channels(); ++ch)
        out.pixels.at(fr, fc, ch) = std::clamp(event.at(r, c, ch), 0.0, 1.0);
      anomaly.at(fr, fc) = 1.0;
    }
  }
  return {std::move(out), std::move(anomaly)};
}

namespace {

// Shrinks an event that does not fit the target frame.
std::pair<Image, BinaryMap> fit_event(const Image& clip, const BinaryMap& mask, int height,
                                      int width) {
  if (clip.height() <= height && clip.width() <= width) return {clip, mask};
  const double scale = std::min(static_cast<double>(height) / clip.height(),
                                static_cast<double>(width) / clip.width());
  const int h = std::max(1, std::min(height, static_cast<int>(std::floor(clip.height() * scale))));
  const int w = std::max(1, std::min(width, static_cast<int>(std::floor(clip.width() * scale))));
  return {resize_bilinear(clip, h, w), resize_nearest(mask, h, w)};
}

}  // namespace

TrainingSample make_training_sample(const Frame& clean_prev, const Frame& clean_cur,
                                    std::span<const OverlayEvent> bank, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augment probability must lie in [0, 1]");
  if (p > 0.0 && bank.empty())
    throw DataError("augmentation requested (p > 0) but the event bank is empty");
  if (!clean_prev.pixels.same_shape(clean_cur.pixels))
    throw ShapeError("make_training_sample: frame dims differ");

  TrainingSample sample;
  sample.target_frame = clean_cur;
  const bool augment = rng.uniform() < p;
  if (!augment) {
    sample.input_frame = clean_cur;
    sample.prev_frame = clean_prev;
    sample.anomaly_map = BinaryMap(clean_cur.pixels.height(), clean_cur.pixels.width(), 1);
    return sample;
  }

  const OverlayEvent& event = bank[rng.below(bank.size())];
  const std::size_t len = event.clip.size();
  const std::size_t k = len > 1 ? 1 + rng.below(len - 1) : 0;
  const std::size_t kp = k > 0 ? k - 1 : 0;
  const int h = clean_cur.pixels.height();
  const int w = clean_cur.pixels.width();
  auto [cur_clip, cur_mask] = fit_event(event.clip[k], event.masks[k], h, w);
  auto [prev_clip, prev_mask] = fit_event(event.clip[kp], event.masks[kp], h, w);

  const int span_h = std::max(cur_clip.height(), prev_clip.height());
  const int span_w = std::max(cur_clip.width(), prev_clip.width());
  PixelPos pos;
  pos.row = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - span_h + 1)));
  pos.col = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - span_w + 1)));

  auto [cur, anomaly] = composite_event(clean_cur, cur_clip, cur_mask, pos);
  auto [prev, prev_anomaly] = composite_event(clean_prev, prev_clip, prev_mask, pos);
  sample.input_frame = std::move(cur);
  sample.prev_frame = std::move(prev);
  sample.anomaly_map = std::move(anomaly);
  sample.augmented = true;
  return sample;
}

}  // namespace sdmae
