#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "sdmae/nn.hpp"

using namespace sdmae;
using namespace sdmae::nn;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.normal() * scale;
  return t;
}

void randomise(Linear& l, Rng& rng) {
  l.weight = random_tensor(static_cast<int>(l.weight.rows()), static_cast<int>(l.weight.cols()), rng, 0.3);
  if (l.bias.size()) l.bias = random_tensor(1, static_cast<int>(l.bias.cols()), rng, 0.1);
}

void randomise(LayerNorm& n, Rng& rng) {
  for (Eigen::Index i = 0; i < n.gamma.size(); ++i) {
    n.gamma.data()[i] = 1.0 + 0.2 * rng.normal();
    n.beta.data()[i] = 0.1 * rng.normal();
  }
}

Block random_block(int dim, int ratio, Rng& rng) {
  Block b = make_block(dim, ratio);
  randomise(b.norm1, rng);
  randomise(b.norm2, rng);
  for (Linear* l : {&b.q, &b.k, &b.v, &b.proj, &b.fc1, &b.fc2}) randomise(*l, rng);
  return b;
}

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

Mat lin(const Mat& x, const Linear& l) {
  Mat y(x.size(), std::vector<double>(l.weight.cols(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (Eigen::Index o = 0; o < l.weight.cols(); ++o) {
      double s = l.bias.size() ? l.bias(0, o) : 0.0;
      for (Eigen::Index k = 0; k < l.weight.rows(); ++k) s += x[i][k] * l.weight(k, o);
      y[i][o] = s;
    }
  return y;
}

Mat norm(const Mat& x, const LayerNorm& p) {
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mean = 0.0, var = 0.0;
    for (double v : x[i]) mean += v / n;
    for (double v : x[i]) var += (v - mean) * (v - mean) / n;
    for (std::size_t j = 0; j < x[i].size(); ++j)
      y[i][j] = (x[i][j] - mean) / std::sqrt(var + kNormEps) * p.gamma(0, j) + p.beta(0, j);
  }
  return y;
}

// Pre-norm block: x + proj(attn(norm1 x)), then + fc2(gelu(fc1(norm2 .))).
Mat block_oracle(const Mat& x, int seq, int heads, const Block& p) {
  const std::size_t dim = x[0].size();
  const std::size_t hd = dim / heads;
  const Mat xn = norm(x, p.norm1);
  const Mat q = lin(xn, p.q), k = lin(xn, p.k), v = lin(xn, p.v);
  Mat att(x.size(), std::vector<double>(dim, 0.0));
  for (std::size_t s0 = 0; s0 < x.size(); s0 += seq)
    for (int h = 0; h < heads; ++h)
      for (int i = 0; i < seq; ++i) {
        std::vector<double> sc(seq);
        double mx = -1e300;
        for (int j = 0; j < seq; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < hd; ++c) dot += q[s0 + i][h * hd + c] * k[s0 + j][h * hd + c];
          sc[j] = dot / std::sqrt(static_cast<double>(hd));
          mx = std::max(mx, sc[j]);
        }
        double z = 0.0;
        for (double& s : sc) z += (s = std::exp(s - mx));
        for (int j = 0; j < seq; ++j)
          for (std::size_t c = 0; c < hd; ++c) att[s0 + i][h * hd + c] += sc[j] / z * v[s0 + j][h * hd + c];
      }
  const Mat pr = lin(att, p.proj);
  Mat mid = x;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) mid[i][j] += pr[i][j];
  Mat hid = lin(norm(mid, p.norm2), p.fc1);
  for (auto& row : hid)
    for (double& v2 : row) v2 = 0.5 * v2 * (1.0 + std::erf(v2 / std::sqrt(2.0)));
  const Mat out = lin(hid, p.fc2);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) mid[i][j] += out[i][j];
  return mid;
}

}  // namespace

TEST(Nn, BiasFreeProjectionCount) {
  EXPECT_EQ(count_parameters(make_linear(3, 5, false)), 15u);
  EXPECT_EQ(count_parameters(make_linear(3, 5, true)), 20u);
  EXPECT_EQ(count_parameters(make_layer_norm(7)), 14u);
}

TEST(Nn, BlockParameterTally) {
  const int dim = 12, r = 3;
  const std::size_t expect = 4 * dim + 4 * (dim * dim + dim) + (dim * dim * r + dim * r) + (dim * r * dim + dim);
  EXPECT_EQ(count_parameters(make_block(dim, r)), expect);
}

TEST(Nn, LinearMatchesLoops) {
  Rng rng(1);
  Linear l = make_linear(5, 3);
  randomise(l, rng);
  const Tensor x = random_tensor(4, 5, rng);
  const Tensor y = linear_forward(x, l);
  const Mat ref = lin(to_mat(x), l);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(y(i, j), ref[i][j], 1e-12);
}

TEST(Nn, GeluValues) {
  Tensor x(1, 3);
  x << -1.0, 0.0, 2.0;
  const Tensor y = gelu_forward(x);
  EXPECT_NEAR(y(0, 0), -0.15865525393145707, 1e-12);
  EXPECT_EQ(y(0, 1), 0.0);
  EXPECT_NEAR(y(0, 2), 1.9544997361036416, 1e-12);
}

TEST(Nn, LayerNormMatchesLoops) {
  Rng rng(2);
  LayerNorm n = make_layer_norm(6);
  randomise(n, rng);
  const Tensor x = random_tensor(5, 6, rng, 2.0);
  const Tensor y = layer_norm_forward(x, n, nullptr);
  const Mat ref = norm(to_mat(x), n);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(y(i, j), ref[i][j], 1e-12);
}

TEST(Nn, BlockMatchesNaiveAttention) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int heads = 1 + static_cast<int>(rng.below(3));
    const int dim = heads * (1 + static_cast<int>(rng.below(4)));
    const int seq = 1 + static_cast<int>(rng.below(6));
    const int batch = 1 + static_cast<int>(rng.below(3));
    const Block b = random_block(dim, 2, rng);
    const Tensor x = random_tensor(seq * batch, dim, rng);
    const Tensor y = block_forward(x, seq, heads, b, nullptr);
    const Mat ref = block_oracle(to_mat(x), seq, heads, b);
    for (int i = 0; i < seq * batch; ++i)
      for (int j = 0; j < dim; ++j) ASSERT_NEAR(y(i, j), ref[i][j], 1e-10);
  }
}

TEST(Nn, InferencePathMatchesTrainingPathOnLargeBatches) {
  Rng rng(7);
  const Block b = random_block(8, 2, rng);
  const Tensor x = random_tensor(50 * 6, 8, rng);
  BlockCache cache;
  const Tensor with_cache = block_forward(x, 50, 2, b, &cache);
  const Tensor without = block_forward(x, 50, 2, b, nullptr);
  EXPECT_LE((with_cache - without).cwiseAbs().maxCoeff(), 1e-12);
  const Mat ref = block_oracle(to_mat(x), 50, 2, b);
  for (int i = 0; i < 300; i += 37)
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(without(i, j), ref[i][j], 1e-10);
}

TEST(Nn, AttentionStaysWithinSequence) {
  Rng rng(4);
  const Block b = random_block(4, 2, rng);
  Tensor x = random_tensor(6, 4, rng);
  const Tensor y1 = block_forward(x, 3, 2, b, nullptr);
  x.row(5).setConstant(9.0);  // second sequence only
  const Tensor y2 = block_forward(x, 3, 2, b, nullptr);
  EXPECT_EQ((y1.topRows(3) - y2.topRows(3)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((y1.bottomRows(3) - y2.bottomRows(3)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Nn, BlockBackwardFiniteDifference) {
  Rng rng(5);
  const int seq = 3, heads = 2, dim = 4;
  Block b = random_block(dim, 2, rng);
  const Tensor x = random_tensor(2 * seq, dim, rng);
  const Tensor dy = random_tensor(2 * seq, dim, rng);
  auto loss = [&](const Tensor& in) { return (block_forward(in, seq, heads, b, nullptr).array() * dy.array()).sum(); };
  BlockCache cache;
  block_forward(x, seq, heads, b, &cache);
  Block g = make_block(dim, 2);
  g.norm1.gamma.setZero();
  g.norm2.gamma.setZero();
  const Tensor dx = block_backward(dy, seq, heads, b, cache, g);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.data()[i] += 1e-5;
    xm.data()[i] -= 1e-5;
    EXPECT_NEAR(dx.data()[i], (loss(xp) - loss(xm)) / 2e-5, 1e-6);
  }
}
