#include "sdmae/model.hpp"

#include <algorithm>

#include "sdmae/error.hpp"
#include "sdmae/rng.hpp"

namespace sdmae {

namespace {

std::atomic<std::uint64_t> g_encoder_passes{0};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::initialized: return "init";
    case Stage::teacher: return "teacher";
    case Stage::student: return "student";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  if (text == "init") return Stage::initialized;
  if (text == "teacher") return Stage::teacher;
  if (text == "student") return Stage::student;
  throw ParseError("stage: expected init, teacher or student, got '" + std::string(text) + "'");
}

ModelParams allocate_model(const ExperimentConfig& cfg) {
  ModelParams p;
  p.config = cfg;
  p.fingerprint = config_fingerprint(cfg);
  const int n = cfg.token_count();
  const int in_dim = cfg.patch_size * cfg.patch_size * cfg.channels;
  const int out_dim = cfg.patch_size * cfg.patch_size * cfg.output_channels();
  const int e = cfg.encoder_dim;
  const int d = cfg.decoder_dim;

  p.encoder.embed = nn::make_linear(in_dim, e);
  p.encoder.pos = Tensor::Zero(n, e);
  for (int i = 0; i < cfg.encoder_blocks; ++i) p.encoder.blocks.push_back(nn::make_block(e, cfg.mlp_ratio));
  p.encoder.norm = nn::make_layer_norm(e);

  p.teacher.embed = nn::make_linear(e, d);
  p.teacher.mask_token = Tensor::Zero(1, d);
  p.teacher.pos = Tensor::Zero(n, d);
  for (int i = 0; i < cfg.teacher_decoder_blocks; ++i)
    p.teacher.blocks.push_back(nn::make_block(d, cfg.mlp_ratio));
  p.teacher.norm = nn::make_layer_norm(d);
  p.teacher.head = nn::make_linear(d, out_dim);

  for (int i = 0; i < cfg.student_decoder_blocks; ++i)
    p.student.blocks.push_back(nn::make_block(d, cfg.mlp_ratio));
  p.student.norm = nn::make_layer_norm(d);
  p.student.head = nn::make_linear(d, out_dim);
  return p;
}

ModelParams init_model(const ExperimentConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  ModelParams p = allocate_model(cfg);
  p.seed = seed;
  Rng rng(mix_seed(seed ^ 0x6d6f64656cULL));
  visit_parameters(p, [&](const std::string& name, Tensor& t, ParamGroup) {
    if (ends_with(name, ".weight") || ends_with(name, ".pos") || ends_with(name, "mask_token")) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.truncated_normal(0.02);
    } else if (ends_with(name, ".gamma")) {
      t.setOnes();
    } else {
      t.setZero();
    }
  });
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  visit_parameters(z, [](const std::string&, Tensor& t, ParamGroup) { t.setZero(); });
  return z;
}

std::size_t count_parameters(const ModelParams& params) {
  std::size_t total = 0;
  visit_parameters(params, [&](const std::string&, const Tensor& t, ParamGroup) {
    total += static_cast<std::size_t>(t.size());
  });
  return total;
}

std::size_t count_parameters(const ModelParams& params, ParamGroup group) {
  std::size_t total = 0;
  visit_parameters(params, [&](const std::string&, const Tensor& t, ParamGroup g) {
    if (g == group) total += static_cast<std::size_t>(t.size());
  });
  return total;
}

std::size_t analytic_parameter_count(const ExperimentConfig& cfg) {
  const auto block = [&](std::size_t dim) {
    const std::size_t hidden = dim * static_cast<std::size_t>(cfg.mlp_ratio);
    return 2 * (2 * dim)                 // two norms
           + 4 * (dim * dim + dim)       // q, k, v, proj
           + (dim * hidden + hidden)     // fc1
           + (hidden * dim + dim);       // fc2
  };
  const std::size_t n = static_cast<std::size_t>(cfg.token_count());
  const std::size_t d2 = static_cast<std::size_t>(cfg.patch_size * cfg.patch_size);
  const std::size_t in_dim = d2 * static_cast<std::size_t>(cfg.channels);
  const std::size_t out_dim = d2 * static_cast<std::size_t>(cfg.output_channels());
  const std::size_t e = static_cast<std::size_t>(cfg.encoder_dim);
  const std::size_t d = static_cast<std::size_t>(cfg.decoder_dim);

  const std::size_t encoder = (in_dim * e + e) + n * e +
                              static_cast<std::size_t>(cfg.encoder_blocks) * block(e) + 2 * e;
  const std::size_t teacher = (e * d + d) + d + n * d +
                              static_cast<std::size_t>(cfg.teacher_decoder_blocks) * block(d) +
                              2 * d + (d * out_dim + out_dim);
  const std::size_t student = static_cast<std::size_t>(cfg.student_decoder_blocks) * block(d) +
                              2 * d + (d * out_dim + out_dim);
  return encoder + teacher + student;
}

std::uint64_t hash_parameters(const ModelParams& params, std::span<const ParamGroup> groups) {
  std::uint64_t h = kFnvOffset;
  visit_parameters(params, [&](const std::string& name, const Tensor& t, ParamGroup g) {
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) return;
    h = fnv1a(name, h);
    const std::int64_t shape[2] = {t.rows(), t.cols()};
    h = fnv1a(shape, sizeof(shape), h);
    h = fnv1a(t.data(), static_cast<std::size_t>(t.size()) * sizeof(double), h);
  });
  return h;
}

double estimate_flops(const ExperimentConfig& cfg) {
  const double n = cfg.token_count();
  const double v = cfg.visible_count(cfg.mask_ratio);
  const double d2 = static_cast<double>(cfg.patch_size) * cfg.patch_size;
  const double in_dim = d2 * cfg.channels;
  const double out_dim = d2 * cfg.output_channels();
  const double e = cfg.encoder_dim;
  const double d = cfg.decoder_dim;
  const double r = cfg.mlp_ratio;
  // multiply-adds of one block over L tokens of width D
  const auto block = [&](double tokens, double dim) {
    return tokens * dim * dim * (4.0 + 2.0 * r)  // q, k, v, proj, fc1, fc2
           + 2.0 * tokens * tokens * dim;        // scores and weighted values
  };
  double macs = v * in_dim * e;                  // token embedding (per-patch, visible tokens)
  macs += cfg.encoder_blocks * block(v, e);
  macs += v * e * d;                             // decoder width reduction
  macs += cfg.teacher_decoder_blocks * block(n, d);
  macs += cfg.student_decoder_blocks * block(n, d);
  macs += 2.0 * n * d * out_dim;                 // teacher and student heads
  return 2.0 * macs;
}

std::uint64_t encoder_pass_count() { return g_encoder_passes.load(); }

ForwardOutput forward_batch(const ModelParams& params, const Tensor& patches,
                            std::span<const MaskPlan> plans, ForwardCache* cache,
                            bool run_student) {
  const ExperimentConfig& cfg = params.config;
  const int n = cfg.token_count();
  const int batch = static_cast<int>(plans.size());
  const int heads = cfg.attention_heads;
  const int in_dim = cfg.patch_size * cfg.patch_size * cfg.channels;
  if (batch < 1) throw ShapeError("forward: empty batch");
  if (patches.rows() != static_cast<Eigen::Index>(batch) * n || patches.cols() != in_dim)
    throw ShapeError("forward: expected " + std::to_string(batch * n) + "x" +
                     std::to_string(in_dim) + " patch rows, got " +
                     std::to_string(patches.rows()) + "x" + std::to_string(patches.cols()));
  const int visible = static_cast<int>(plans[0].visible.size());
  for (const auto& plan : plans) {
    if (plan.n != n)
      throw ShapeError("forward: mask plan has n=" + std::to_string(plan.n) + ", model expects " +
                       std::to_string(n));
    if (static_cast<int>(plan.visible.size()) != visible ||
        plan.visible.size() + plan.masked.size() != static_cast<std::size_t>(n))
      throw ShapeError("forward: mask plans in one batch must share the visible count");
  }
  if (visible < 1) throw ShapeError("forward: no visible tokens");

  std::vector<int> visible_rows;
  std::vector<int> masked_rows;
  visible_rows.reserve(static_cast<std::size_t>(batch * visible));
  masked_rows.reserve(static_cast<std::size_t>(batch * (n - visible)));
  for (int b = 0; b < batch; ++b) {
    for (int idx : plans[b].visible) visible_rows.push_back(b * n + idx);
    for (int idx : plans[b].masked) masked_rows.push_back(b * n + idx);
  }

  // encoder
  ++g_encoder_passes;
  const int e = cfg.encoder_dim;
  Tensor x(static_cast<Eigen::Index>(visible_rows.size()), e);
  {
    Tensor vis_patches(x.rows(), in_dim);
    for (std::size_t i = 0; i < visible_rows.size(); ++i)
      vis_patches.row(static_cast<Eigen::Index>(i)) = patches.row(visible_rows[i]);
    // The d x d stride-d convolution acts on each patch independently, so it
    // is evaluated on the visible patches only.
    x = nn::linear_forward(vis_patches, params.encoder.embed);
    for (std::size_t i = 0; i < visible_rows.size(); ++i)
      x.row(static_cast<Eigen::Index>(i)) += params.encoder.pos.row(visible_rows[i] % n);
  }
  if (cache != nullptr) cache->encoder_blocks.resize(params.encoder.blocks.size());
  for (std::size_t i = 0; i < params.encoder.blocks.size(); ++i)
    x = nn::block_forward(x, visible, heads, params.encoder.blocks[i],
                          cache ? &cache->encoder_blocks[i] : nullptr);
  Tensor encoded = nn::layer_norm_forward(x, params.encoder.norm, cache ? &cache->encoder_norm : nullptr);

  // teacher decoder
  const int dd = cfg.decoder_dim;
  const Tensor reduced = nn::linear_forward(encoded, params.teacher.embed);
  Tensor y(static_cast<Eigen::Index>(batch) * n, dd);
  for (std::size_t i = 0; i < visible_rows.size(); ++i)
    y.row(visible_rows[i]) = reduced.row(static_cast<Eigen::Index>(i));
  for (int row : masked_rows) y.row(row) = params.teacher.mask_token.row(0);
  for (int b = 0; b < batch; ++b) y.middleRows(static_cast<Eigen::Index>(b) * n, n) += params.teacher.pos;
  if (cache != nullptr) cache->decoder_input = y;

  Tensor branch;
  if (cache != nullptr) cache->teacher_blocks.resize(params.teacher.blocks.size());
  for (std::size_t i = 0; i < params.teacher.blocks.size(); ++i) {
    y = nn::block_forward(y, n, heads, params.teacher.blocks[i],
                          cache ? &cache->teacher_blocks[i] : nullptr);
    if (i == 0) branch = y;
  }
  Tensor teacher_normed =
      nn::layer_norm_forward(y, params.teacher.norm, cache ? &cache->teacher_norm : nullptr);
  ForwardOutput out;
  out.teacher = nn::linear_forward(teacher_normed, params.teacher.head);

  // student decoder branches after the first teacher block
  Tensor student_normed;
  if (run_student) {
    Tensor s = branch;
    if (cache != nullptr) cache->student_blocks.resize(params.student.blocks.size());
    for (std::size_t i = 0; i < params.student.blocks.size(); ++i)
      s = nn::block_forward(s, n, heads, params.student.blocks[i],
                            cache ? &cache->student_blocks[i] : nullptr);
    student_normed =
        nn::layer_norm_forward(s, params.student.norm, cache ? &cache->student_norm : nullptr);
    out.student = nn::linear_forward(student_normed, params.student.head);
  }

  if (cache != nullptr) {
    cache->batch = batch;
    cache->tokens = n;
    cache->visible = visible;
    cache->patches = patches;
    cache->visible_rows = std::move(visible_rows);
    cache->masked_rows = std::move(masked_rows);
    cache->encoded = std::move(encoded);
    cache->teacher_normed = std::move(teacher_normed);
    cache->branch = std::move(branch);
    cache->student_normed = std::move(student_normed);
    if (!run_student) cache->student_blocks.clear();
  }
  return out;
}

std::pair<PatchGrid, PatchGrid> forward(const ModelParams& params, const Image& frame,
                                        const MaskPlan& plan) {
  const ExperimentConfig& cfg = params.config;
  if (frame.height() != cfg.frame_height || frame.width() != cfg.frame_width ||
      frame.channels() != cfg.channels)
    throw ShapeError("forward: frame is " + std::to_string(frame.height()) + "x" +
                     std::to_string(frame.width()) + "x" + std::to_string(frame.channels()) +
                     ", model expects " + std::to_string(cfg.frame_height) + "x" +
                     std::to_string(cfg.frame_width) + "x" + std::to_string(cfg.channels));
  const PatchGrid input = patchify(frame, cfg.patch_size);
  const MaskPlan plans[1] = {plan};
  ForwardOutput out = forward_batch(params, input.data, plans, nullptr, true);
  PatchGrid teacher{input.grid_height, input.grid_width, cfg.patch_size, cfg.output_channels(),
                    std::move(out.teacher)};
  PatchGrid student{input.grid_height, input.grid_width, cfg.patch_size, cfg.output_channels(),
                    std::move(out.student)};
  return {std::move(teacher), std::move(student)};
}

void backward(const ModelParams& params, const ForwardCache& cache, const Tensor* d_teacher,
              const Tensor* d_student, ModelParams& grads) {
  const ExperimentConfig& cfg = params.config;
  const int n = cache.tokens;
  const int heads = cfg.attention_heads;

  if (d_student != nullptr) {
    if (cache.student_blocks.size() != params.student.blocks.size())
      throw ShapeError("backward: forward pass ran without the student branch");
    Tensor ds = nn::linear_backward(cache.student_normed, *d_student, params.student.head,
                                    grads.student.head);
    ds = nn::layer_norm_backward(ds, params.student.norm, cache.student_norm, grads.student.norm);
    for (std::size_t i = params.student.blocks.size(); i-- > 0;)
      ds = nn::block_backward(ds, n, heads, params.student.blocks[i], cache.student_blocks[i],
                              grads.student.blocks[i]);
    // stop-gradient: the branch activations are not differentiated further
  }

  if (d_teacher == nullptr) return;

  Tensor dy = nn::linear_backward(cache.teacher_normed, *d_teacher, params.teacher.head,
                                  grads.teacher.head);
  dy = nn::layer_norm_backward(dy, params.teacher.norm, cache.teacher_norm, grads.teacher.norm);
  for (std::size_t i = params.teacher.blocks.size(); i-- > 0;)
    dy = nn::block_backward(dy, n, heads, params.teacher.blocks[i], cache.teacher_blocks[i],
                            grads.teacher.blocks[i]);

  for (int b = 0; b < cache.batch; ++b)
    grads.teacher.pos += dy.middleRows(static_cast<Eigen::Index>(b) * n, n);
  for (int row : cache.masked_rows) grads.teacher.mask_token.row(0) += dy.row(row);
  Tensor d_reduced(static_cast<Eigen::Index>(cache.visible_rows.size()), dy.cols());
  for (std::size_t i = 0; i < cache.visible_rows.size(); ++i)
    d_reduced.row(static_cast<Eigen::Index>(i)) = dy.row(cache.visible_rows[i]);

  Tensor dx = nn::linear_backward(cache.encoded, d_reduced, params.teacher.embed,
                                  grads.teacher.embed);
  dx = nn::layer_norm_backward(dx, params.encoder.norm, cache.encoder_norm, grads.encoder.norm);
  for (std::size_t i = params.encoder.blocks.size(); i-- > 0;)
    dx = nn::block_backward(dx, cache.visible, heads, params.encoder.blocks[i],
                            cache.encoder_blocks[i], grads.encoder.blocks[i]);

  Tensor vis_patches(dx.rows(), cache.patches.cols());
  for (std::size_t i = 0; i < cache.visible_rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    vis_patches.row(r) = cache.patches.row(cache.visible_rows[i]);
    grads.encoder.pos.row(cache.visible_rows[i] % n) += dx.row(r);
  }
  grads.encoder.embed.weight.noalias() += vis_patches.transpose() * dx;
  grads.encoder.embed.bias += dx.colwise().sum();
}

}  // namespace sdmae
