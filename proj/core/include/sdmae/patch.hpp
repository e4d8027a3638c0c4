#pragma once

#include <vector>

#include "sdmae/image.hpp"
#include "sdmae/rng.hpp"
#include "sdmae/tensor.hpp"

namespace sdmae {

/// n = grid_height * grid_width non-overlapping d x d x c patches.
/// Row i of `data` is patch i in row-major grid order; inside a patch the
/// entry (j, k, l) sits at column (j * d + k) * c + l.
struct PatchGrid {
  int grid_height = 0;
  int grid_width = 0;
  int patch_size = 0;
  int channels = 0;
  Tensor data;

  int token_count() const { return grid_height * grid_width; }
  int patch_dim() const { return patch_size * patch_size * channels; }
};

PatchGrid patchify(const Image& image, int patch_size);
Image unpatchify(const PatchGrid& grid);

/// Keeps the first `count` channels of every patch.
PatchGrid slice_patch_channels(const PatchGrid& grid, int first, int count);

/// Sorted, 0-based, disjoint token index lists covering 0..n-1.
struct MaskPlan {
  std::vector<int> visible;
  std::vector<int> masked;
  int n = 0;

  bool operator==(const MaskPlan&) const = default;
};

/// Masks exactly round(ratio * n) tokens, uniformly without replacement.
MaskPlan sample_mask(int n, double ratio, Rng& rng);

/// Everything visible.
MaskPlan full_plan(int n);

}  // namespace sdmae
