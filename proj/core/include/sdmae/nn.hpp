#pragma once

#include <vector>

#include "sdmae/tensor.hpp"

namespace sdmae::nn {

/// y = x W + b. A pointwise (1x1) convolution over the token grid.
/// weight is (in x out); bias is (1 x out) or empty for bias-free layers.
struct Linear {
  Tensor weight;
  Tensor bias;
};

struct LayerNorm {
  Tensor gamma;  ///< (1 x dim)
  Tensor beta;   ///< (1 x dim)
};

/// Pre-norm transformer block: multi-head self-attention with pointwise
/// q/k/v/output projections, then a pointwise two-layer feed-forward stage.
struct Block {
  LayerNorm norm1;
  Linear q, k, v, proj;
  LayerNorm norm2;
  Linear fc1, fc2;
};

inline constexpr double kNormEps = 1e-6;

Linear make_linear(int in, int out, bool bias = true);
LayerNorm make_layer_norm(int dim);
Block make_block(int dim, int mlp_ratio);

std::size_t count_parameters(const Linear& p);
std::size_t count_parameters(const LayerNorm& p);
std::size_t count_parameters(const Block& p);

Tensor linear_forward(const Tensor& x, const Linear& p);
/// Accumulates parameter gradients into `g`; returns dL/dx.
Tensor linear_backward(const Tensor& x, const Tensor& dy, const Linear& p, Linear& g);

struct NormCache {
  Tensor xhat;
  Eigen::VectorXd inv_std;
};
Tensor layer_norm_forward(const Tensor& x, const LayerNorm& p, NormCache* cache);
Tensor layer_norm_backward(const Tensor& dy, const LayerNorm& p, const NormCache& cache,
                           LayerNorm& g);

/// Exact (erf) GELU.
Tensor gelu_forward(const Tensor& x);
Tensor gelu_backward(const Tensor& x, const Tensor& dy);

/// Activations saved by block_forward for the backward pass.
struct BlockCache {
  Tensor input;
  NormCache norm1;
  Tensor xn1;
  Tensor q, k, v;
  std::vector<Tensor> probs;  ///< one (L x L) matrix per (sample, head)
  Tensor attn;                ///< concatenated head outputs
  Tensor mid;                 ///< residual stream after attention
  NormCache norm2;
  Tensor xn2;
  Tensor hidden_pre;
  Tensor hidden;
};

/// `x` stacks `x.rows() / seq_len` independent sequences of length seq_len;
/// attention never crosses sequence boundaries. Pass cache = nullptr for
/// inference.
Tensor block_forward(const Tensor& x, int seq_len, int heads, const Block& p, BlockCache* cache);
Tensor block_backward(const Tensor& dy, int seq_len, int heads, const Block& p,
                      const BlockCache& cache, Block& g);

}  // namespace sdmae::nn
