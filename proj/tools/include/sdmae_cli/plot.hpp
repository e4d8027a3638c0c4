#pragma once

#include <span>
#include <string>
#include <vector>

#include "sdmae/image.hpp"
#include "sdmae/infer.hpp"

namespace sdmae::cli {

/// Score-vs-frame curve as a standalone SVG. Frames labelled abnormal are
/// shaded; the curve is min-max scaled to the plot height.
std::string score_curve_svg(const ScoreSeries& series, std::span<const int> labels,
                            const std::string& title);

/// RGB copy of `frame` with each region's bounding box drawn in red and
/// the hull vertices marked.
Image overlay_regions(const Image& frame, std::span<const Region> regions);

}  // namespace sdmae::cli
