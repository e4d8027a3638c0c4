#include "sdmae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdmae/error.hpp"

namespace sdmae::nn {

Linear make_linear(int in, int out, bool bias) {
  Linear l;
  l.weight = Tensor::Zero(in, out);
  l.bias = bias ? Tensor::Zero(1, out) : Tensor(1, 0);
  return l;
}

LayerNorm make_layer_norm(int dim) { return {Tensor::Ones(1, dim), Tensor::Zero(1, dim)}; }

Block make_block(int dim, int mlp_ratio) {
  Block b;
  b.norm1 = make_layer_norm(dim);
  b.q = make_linear(dim, dim);
  b.k = make_linear(dim, dim);
  b.v = make_linear(dim, dim);
  b.proj = make_linear(dim, dim);
  b.norm2 = make_layer_norm(dim);
  b.fc1 = make_linear(dim, dim * mlp_ratio);
  b.fc2 = make_linear(dim * mlp_ratio, dim);
  return b;
}

std::size_t count_parameters(const Linear& p) {
  return static_cast<std::size_t>(p.weight.size() + p.bias.size());
}
std::size_t count_parameters(const LayerNorm& p) {
  return static_cast<std::size_t>(p.gamma.size() + p.beta.size());
}
std::size_t count_parameters(const Block& p) {
  return count_parameters(p.norm1) + count_parameters(p.q) + count_parameters(p.k) +
         count_parameters(p.v) + count_parameters(p.proj) + count_parameters(p.norm2) +
         count_parameters(p.fc1) + count_parameters(p.fc2);
}

Tensor linear_forward(const Tensor& x, const Linear& p) {
  if (x.cols() != p.weight.rows())
    throw ShapeError("linear: input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(p.weight.rows()));
  Tensor y = x * p.weight;
  if (p.bias.size() > 0) y.rowwise() += p.bias.row(0);
  return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& dy, const Linear& p, Linear& g) {
  g.weight.noalias() += x.transpose() * dy;
  if (p.bias.size() > 0) g.bias += dy.colwise().sum();
  return dy * p.weight.transpose();
}

Tensor layer_norm_forward(const Tensor& x, const LayerNorm& p, NormCache* cache) {
  const Eigen::Index dim = x.cols();
  const Eigen::VectorXd mean = x.rowwise().mean();
  Tensor centered = x.colwise() - mean;
  const Eigen::VectorXd var = centered.array().square().rowwise().sum() / static_cast<double>(dim);
  const Eigen::VectorXd inv_std = (var.array() + kNormEps).rsqrt();
  Tensor xhat = centered.array().colwise() * inv_std.array();
  Tensor y = (xhat.array().rowwise() * p.gamma.row(0).array()).rowwise() + p.beta.row(0).array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

Tensor layer_norm_backward(const Tensor& dy, const LayerNorm& p, const NormCache& cache,
                           LayerNorm& g) {
  const double dim = static_cast<double>(dy.cols());
  g.gamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  g.beta += dy.colwise().sum();
  const Tensor dxhat = dy.array().rowwise() * p.gamma.row(0).array();
  const Eigen::VectorXd mean_dxhat = dxhat.rowwise().sum() / dim;
  const Eigen::VectorXd mean_dxhat_xhat =
      (dxhat.array() * cache.xhat.array()).rowwise().sum().matrix() / dim;
  Tensor dx = dxhat.colwise() - mean_dxhat;
  dx.array() -= cache.xhat.array().colwise() * mean_dxhat_xhat.array();
  dx.array().colwise() *= cache.inv_std.array();
  return dx;
}

Tensor gelu_forward(const Tensor& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2)); });
}

Tensor gelu_backward(const Tensor& x, const Tensor& dy) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const Tensor local = x.unaryExpr([inv_sqrt_2pi](double v) {
    return 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2)) +
           v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
  });
  return dy.cwiseProduct(local);
}

namespace {

void check_layout(const Tensor& x, int seq_len, int heads) {
  if (seq_len < 1 || x.rows() % seq_len != 0)
    throw ShapeError("block: " + std::to_string(x.rows()) + " rows is not a multiple of seq_len " +
                     std::to_string(seq_len));
  if (heads < 1 || x.cols() % heads != 0)
    throw ShapeError("block: width " + std::to_string(x.cols()) + " not divisible by " +
                     std::to_string(heads) + " heads");
}

}  // namespace

Tensor block_forward(const Tensor& x, int seq_len, int heads, const Block& p, BlockCache* cache) {
  check_layout(x, seq_len, heads);
  const Eigen::Index rows = x.rows();
  const Eigen::Index dim = x.cols();
  const Eigen::Index head_dim = dim / heads;
  const Eigen::Index batch = rows / seq_len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  NormCache n1;
  Tensor xn1 = layer_norm_forward(x, p.norm1, cache ? &n1 : nullptr);
  Tensor q = linear_forward(xn1, p.q);
  Tensor k = linear_forward(xn1, p.k);
  Tensor v = linear_forward(xn1, p.v);

  Tensor attn(rows, dim);
  std::vector<Tensor> probs;
  if (cache != nullptr) probs.reserve(static_cast<std::size_t>(batch * heads));
  Tensor scores(seq_len, seq_len);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index r0 = b * seq_len;
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * head_dim;
      scores.noalias() = q.block(r0, c0, seq_len, head_dim) *
                         k.block(r0, c0, seq_len, head_dim).transpose();
      scores *= scale;
      const Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
      scores = (scores.colwise() - row_max).array().exp().matrix();
      const Eigen::VectorXd row_sum = scores.rowwise().sum();
      scores.array().colwise() /= row_sum.array();
      attn.block(r0, c0, seq_len, head_dim).noalias() =
          scores * v.block(r0, c0, seq_len, head_dim);
      if (cache != nullptr) probs.push_back(scores);
    }
  }

  Tensor mid = x + linear_forward(attn, p.proj);
  if (cache == nullptr) {
    // Inference: run the token-wise feed-forward in row tiles so the hidden
    // activations stay in cache for large batches.
    constexpr Eigen::Index kTile = 128;
    Tensor out(rows, dim);
    for (Eigen::Index r0 = 0; r0 < rows; r0 += kTile) {
      const Eigen::Index len = std::min(kTile, rows - r0);
      const Tensor m = mid.middleRows(r0, len);
      const Tensor hidden = gelu_forward(linear_forward(layer_norm_forward(m, p.norm2, nullptr), p.fc1));
      out.middleRows(r0, len) = m + linear_forward(hidden, p.fc2);
    }
    return out;
  }
  NormCache n2;
  Tensor xn2 = layer_norm_forward(mid, p.norm2, &n2);
  Tensor hidden_pre = linear_forward(xn2, p.fc1);
  Tensor hidden = gelu_forward(hidden_pre);
  Tensor out = mid + linear_forward(hidden, p.fc2);

  {
    cache->input = x;
    cache->norm1 = std::move(n1);
    cache->xn1 = std::move(xn1);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->attn = std::move(attn);
    cache->mid = std::move(mid);
    cache->norm2 = std::move(n2);
    cache->xn2 = std::move(xn2);
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Tensor block_backward(const Tensor& dy, int seq_len, int heads, const Block& p,
                      const BlockCache& c, Block& g) {
  check_layout(dy, seq_len, heads);
  const Eigen::Index rows = dy.rows();
  const Eigen::Index dim = dy.cols();
  const Eigen::Index head_dim = dim / heads;
  const Eigen::Index batch = rows / seq_len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  // feed-forward branch
  const Tensor d_hidden = linear_backward(c.hidden, dy, p.fc2, g.fc2);
  const Tensor d_pre = gelu_backward(c.hidden_pre, d_hidden);
  const Tensor d_xn2 = linear_backward(c.xn2, d_pre, p.fc1, g.fc1);
  Tensor d_mid = dy + layer_norm_backward(d_xn2, p.norm2, c.norm2, g.norm2);

  // attention branch
  const Tensor d_attn = linear_backward(c.attn, d_mid, p.proj, g.proj);
  Tensor dq(rows, dim), dk(rows, dim), dv(rows, dim);
  Tensor d_probs(seq_len, seq_len);
  std::size_t idx = 0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index r0 = b * seq_len;
    for (Eigen::Index h = 0; h < heads; ++h, ++idx) {
      const Eigen::Index c0 = h * head_dim;
      const Tensor& prob = c.probs[idx];
      const auto d_out = d_attn.block(r0, c0, seq_len, head_dim);
      d_probs.noalias() = d_out * c.v.block(r0, c0, seq_len, head_dim).transpose();
      dv.block(r0, c0, seq_len, head_dim).noalias() = prob.transpose() * d_out;
      // softmax Jacobian-vector product, folded with the 1/sqrt(dh) scale
      const Eigen::VectorXd dot = (d_probs.array() * prob.array()).rowwise().sum();
      const Tensor d_scores = (prob.array() * (d_probs.colwise() - dot).array()).matrix() * scale;
      dq.block(r0, c0, seq_len, head_dim).noalias() =
          d_scores * c.k.block(r0, c0, seq_len, head_dim);
      dk.block(r0, c0, seq_len, head_dim).noalias() =
          d_scores.transpose() * c.q.block(r0, c0, seq_len, head_dim);
    }
  }
  Tensor d_xn1 = linear_backward(c.xn1, dq, p.q, g.q);
  d_xn1 += linear_backward(c.xn1, dk, p.k, g.k);
  d_xn1 += linear_backward(c.xn1, dv, p.v, g.v);
  d_mid += layer_norm_backward(d_xn1, p.norm1, c.norm1, g.norm1);
  return d_mid;
}

}  // namespace sdmae::nn
