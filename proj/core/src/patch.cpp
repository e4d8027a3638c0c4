#include "sdmae/patch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdmae/error.hpp"

namespace sdmae {

PatchGrid patchify(const Image& image, int patch_size) {
  const int d = patch_size;
  if (d < 1 || image.height() % d != 0 || image.width() % d != 0)
    throw ShapeError("patchify: " + std::to_string(image.height()) + "x" +
                     std::to_string(image.width()) + " not divisible by patch size " +
                     std::to_string(d));
  PatchGrid grid;
  grid.grid_height = image.height() / d;
  grid.grid_width = image.width() / d;
  grid.patch_size = d;
  grid.channels = image.channels();
  grid.data.resize(grid.token_count(), grid.patch_dim());
  const int c = image.channels();
  for (int pr = 0; pr < grid.grid_height; ++pr)
    for (int pc = 0; pc < grid.grid_width; ++pc) {
      auto row = grid.data.row(pr * grid.grid_width + pc);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < c; ++l) row((j * d + k) * c + l) = image.at(pr * d + j, pc * d + k, l);
    }
  return grid;
}

Image unpatchify(const PatchGrid& grid) {
  const int d = grid.patch_size;
  if (d < 1 || grid.grid_height < 1 || grid.grid_width < 1 || grid.channels < 1 ||
      grid.data.rows() != grid.token_count() || grid.data.cols() != grid.patch_dim())
    throw ShapeError("unpatchify: patch data " + std::to_string(grid.data.rows()) + "x" +
                     std::to_string(grid.data.cols()) + " inconsistent with grid " +
                     std::to_string(grid.grid_height) + "x" + std::to_string(grid.grid_width) +
                     " of " + std::to_string(d) + "x" + std::to_string(d) + "x" +
                     std::to_string(grid.channels) + " patches");
  const int c = grid.channels;
  Image image(grid.grid_height * d, grid.grid_width * d, c);
  for (int pr = 0; pr < grid.grid_height; ++pr)
    for (int pc = 0; pc < grid.grid_width; ++pc) {
      const auto row = grid.data.row(pr * grid.grid_width + pc);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < c; ++l) image.at(pr * d + j, pc * d + k, l) = row((j * d + k) * c + l);
    }
  return image;
}

PatchGrid slice_patch_channels(const PatchGrid& grid, int first, int count) {
  if (first < 0 || count < 1 || first + count > grid.channels)
    throw ShapeError("slice_patch_channels: channel range out of bounds");
  PatchGrid out = grid;
  out.channels = count;
  const int d2 = grid.patch_size * grid.patch_size;
  out.data.resize(grid.token_count(), d2 * count);
  for (int px = 0; px < d2; ++px)
    out.data.middleCols(px * count, count) = grid.data.middleCols(px * grid.channels + first, count);
  return out;
}

MaskPlan sample_mask(int n, double ratio, Rng& rng) {
  if (n < 1) throw ShapeError("sample_mask: n must be >= 1");
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("mask ratio must lie in [0, 1)");
  const int masked = static_cast<int>(std::lround(ratio * n));
  if (masked >= n) throw ConfigError("mask ratio " + std::to_string(ratio) + " masks all " +
                                     std::to_string(n) + " tokens");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // partial Fisher-Yates: the first `masked` entries are a uniform sample
  for (int i = 0; i < masked; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(order[i], order[j]);
  }
  MaskPlan plan;
  plan.n = n;
  plan.masked.assign(order.begin(), order.begin() + masked);
  plan.visible.assign(order.begin() + masked, order.end());
  std::sort(plan.masked.begin(), plan.masked.end());
  std::sort(plan.visible.begin(), plan.visible.end());
  return plan;
}

MaskPlan full_plan(int n) {
  MaskPlan plan;
  plan.n = n;
  plan.visible.resize(static_cast<std::size_t>(n));
  std::iota(plan.visible.begin(), plan.visible.end(), 0);
  return plan;
}

}  // namespace sdmae
