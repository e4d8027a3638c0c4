#pragma once

#include <span>
#include <utility>

#include "sdmae/data.hpp"
#include "sdmae/image.hpp"
#include "sdmae/rng.hpp"

namespace sdmae {

struct PixelPos {
  int row = 0;
  int col = 0;
};

/// Hard-pastes `event_frame` where `mask` is 1, with its top-left corner at
/// `position`. The event is converted to the frame's channel count first.
/// Returns the composited frame and the mask placed on a full-size zero map.
std::pair<Frame, BinaryMap> composite_event(const Frame& frame, const Image& event_frame,
                                            const BinaryMap& mask, PixelPos position);

struct TrainingSample {
  Frame input_frame;   ///< possibly composited
  Frame prev_frame;    ///< predecessor, composited coherently with input_frame
  Frame target_frame;  ///< always the clean current frame
  BinaryMap anomaly_map;
  bool augmented = false;
};

/// With probability p, overlays a random event (random clip offset, random
/// position fully inside the frame) on both frames of the pair; clip frame k
/// goes onto `clean_cur` and frame k-1 onto `clean_prev`.
TrainingSample make_training_sample(const Frame& clean_prev, const Frame& clean_cur,
                                    std::span<const OverlayEvent> bank, double p, Rng& rng);

}  // namespace sdmae
