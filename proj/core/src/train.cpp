#include "sdmae/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdmae/augment.hpp"
#include "sdmae/error.hpp"

namespace sdmae {

double weighted_patch_loss(const Tensor& pred, const Tensor& target, std::span<const double> weights,
                           Tensor* grad, double grad_scale) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("loss: prediction " + std::to_string(pred.rows()) + "x" +
                     std::to_string(pred.cols()) + " vs target " + std::to_string(target.rows()) +
                     "x" + std::to_string(target.cols()));
  if (static_cast<Eigen::Index>(weights.size()) != pred.rows())
    throw ShapeError("loss: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(pred.rows()) + " patches");
  const double n = static_cast<double>(pred.rows());
  const Tensor diff = pred - target;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < diff.rows(); ++i) loss += weights[i] * diff.row(i).squaredNorm();
  loss /= n;
  if (grad != nullptr) {
    *grad = diff;
    for (Eigen::Index i = 0; i < diff.rows(); ++i) grad->row(i) *= 2.0 * weights[i] * grad_scale / n;
  }
  return loss;
}

namespace {

void check_grid_pair(const PatchGrid& a, const PatchGrid& b) {
  if (a.grid_height != b.grid_height || a.grid_width != b.grid_width ||
      a.patch_size != b.patch_size || a.channels != b.channels)
    throw ShapeError("loss: patch grids differ in shape");
}

}  // namespace

double teacher_loss(const PatchGrid& pred, const PatchGrid& target, const TokenWeights& weights) {
  check_grid_pair(pred, target);
  return weighted_patch_loss(pred.data, target.data, weights.w);
}

double student_loss(const PatchGrid& student_pred, const PatchGrid& teacher_pred,
                    const TokenWeights& weights) {
  check_grid_pair(student_pred, teacher_pred);
  return weighted_patch_loss(student_pred.data, teacher_pred.data, weights.w);
}

AdamState make_adam(const ModelParams& params) {
  AdamState s;
  s.first = zeros_like(params);
  s.second = zeros_like(params);
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double learning_rate, std::span<const ParamGroup> trainable) {
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  std::vector<Tensor*> p, m, v;
  std::vector<const Tensor*> g;
  std::vector<ParamGroup> groups;
  visit_parameters(params, [&](const std::string&, Tensor& t, ParamGroup grp) {
    p.push_back(&t);
    groups.push_back(grp);
  });
  visit_parameters(grads, [&](const std::string&, const Tensor& t, ParamGroup) { g.push_back(&t); });
  visit_parameters(state.first, [&](const std::string&, Tensor& t, ParamGroup) { m.push_back(&t); });
  visit_parameters(state.second, [&](const std::string&, Tensor& t, ParamGroup) { v.push_back(&t); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::find(trainable.begin(), trainable.end(), groups[i]) == trainable.end()) continue;
    m[i]->array() = b1 * m[i]->array() + (1.0 - b1) * g[i]->array();
    v[i]->array() = b2 * v[i]->array() + (1.0 - b2) * g[i]->array().square();
    p[i]->array() -= learning_rate * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + state.eps);
  }
}

PreparedBatch prepare_batch(std::span<const VideoSequence> videos, std::span<const OverlayEvent> bank,
                            const ExperimentConfig& cfg, std::span<const FrameRef> refs, Rng& rng) {
  const int n = cfg.token_count();
  const int d = cfg.patch_size;
  const int in_dim = d * d * cfg.channels;
  const int out_dim = d * d * cfg.output_channels();
  const auto batch = static_cast<Eigen::Index>(refs.size());

  PreparedBatch out;
  out.inputs.resize(batch * n, in_dim);
  out.targets.resize(batch * n, out_dim);
  out.weights.reserve(refs.size());
  out.plans.reserve(refs.size());

  for (Eigen::Index b = 0; b < batch; ++b) {
    const FrameRef ref = refs[static_cast<std::size_t>(b)];
    const VideoSequence& video = videos[static_cast<std::size_t>(ref.video)];
    const Frame& cur = video.frames[static_cast<std::size_t>(ref.frame)];
    // first frame: its own predecessor, so its clean motion map is zero
    const Frame& prev = video.frames[static_cast<std::size_t>(std::max(0, ref.frame - 1))];
    if (cur.pixels.height() != cfg.frame_height || cur.pixels.width() != cfg.frame_width ||
        cur.pixels.channels() != cfg.channels)
      throw ShapeError("training frame of video '" + video.video_id + "' does not match the configuration");

    const TrainingSample sample =
        make_training_sample(prev, cur, bank, cfg.augment_probability, rng);
    if (sample.augmented) ++out.augmented;

    std::vector<double> w;
    if (cfg.use_motion_weights) {
      GradientMap grad = motion_gradient(sample.prev_frame, sample.input_frame);
      if (sample.augmented) grad = fuse_anomaly(grad, sample.anomaly_map);
      w = token_weights(patch_motion_stats(grad, d)).w;
    } else {
      w = uniform_weights(static_cast<std::size_t>(n)).w;
    }

    MaskPlan plan = sample_mask(n, cfg.mask_ratio, rng);
    if (cfg.loss_on_masked_only)
      for (int idx : plan.visible) w[static_cast<std::size_t>(idx)] = 0.0;

    out.inputs.middleRows(b * n, n) = patchify(sample.input_frame.pixels, d).data;
    const Image target = cfg.predict_anomaly_map
                             ? concat_channels(sample.target_frame.pixels, sample.anomaly_map)
                             : sample.target_frame.pixels;
    out.targets.middleRows(b * n, n) = patchify(target, d).data;
    out.weights.push_back(std::move(w));
    out.plans.push_back(std::move(plan));
  }
  return out;
}

namespace {

std::vector<FrameRef> all_frames(std::span<const VideoSequence> videos) {
  std::vector<FrameRef> refs;
  for (std::size_t v = 0; v < videos.size(); ++v)
    for (std::size_t t = 0; t < videos[v].frames.size(); ++t)
      refs.push_back({static_cast<int>(v), static_cast<int>(t)});
  return refs;
}

// Batch loss = mean over samples of the per-sample weighted loss.
double batch_loss(const Tensor& pred, const Tensor& target, const PreparedBatch& batch, int n,
                  Tensor& grad) {
  const auto samples = static_cast<Eigen::Index>(batch.plans.size());
  grad.resize(pred.rows(), pred.cols());
  double total = 0.0;
  Tensor g;
  for (Eigen::Index b = 0; b < samples; ++b) {
    total += weighted_patch_loss(pred.middleRows(b * n, n), target.middleRows(b * n, n),
                                 batch.weights[static_cast<std::size_t>(b)], &g,
                                 1.0 / static_cast<double>(samples));
    grad.middleRows(b * n, n) = g;
  }
  return total / static_cast<double>(samples);
}

enum class Phase { teacher, student };

std::pair<ModelParams, TrainState> run_stage(ModelParams params, Phase phase,
                                             std::span<const VideoSequence> videos,
                                             std::span<const OverlayEvent> bank,
                                             const ExperimentConfig& cfg, std::uint64_t seed,
                                             const TrainCallbacks& callbacks) {
  const std::vector<FrameRef> frames = all_frames(videos);
  if (frames.empty()) throw TrainingError("training set is empty");
  if (cfg.augment_probability > 0.0 && bank.empty())
    throw TrainingError("augment_probability > 0 but the event bank is empty");

  const bool student = phase == Phase::student;
  const int epochs = student ? cfg.student_epochs : cfg.teacher_epochs;
  const int n = cfg.token_count();
  const std::vector<ParamGroup> trainable =
      student ? std::vector<ParamGroup>{ParamGroup::student_decoder}
              : std::vector<ParamGroup>{ParamGroup::encoder, ParamGroup::teacher_decoder};

  TrainState state;
  state.stage = student ? Stage::student : Stage::teacher;
  state.optimizer = make_adam(params);
  state.rng = Rng(mix_seed(seed ^ (student ? 0x73747564656e74ULL : 0x74656163686572ULL)));

  ModelParams grads = zeros_like(params);
  std::vector<FrameRef> order = frames;
  ForwardCache cache;
  Tensor d_out;

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    state.rng.shuffle(std::span<FrameRef>(order));
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const FrameRef> refs(order.data() + start, stop - start);
      const PreparedBatch batch = prepare_batch(videos, bank, cfg, refs, state.rng);

      visit_parameters(grads, [](const std::string&, Tensor& t, ParamGroup) { t.setZero(); });
      const ForwardOutput out = forward_batch(params, batch.inputs, batch.plans, &cache, student);
      double loss = 0.0;
      if (student) {
        loss = batch_loss(out.student, out.teacher, batch, n, d_out);
        backward(params, cache, nullptr, &d_out, grads);
      } else {
        loss = batch_loss(out.teacher, batch.targets, batch, n, d_out);
        backward(params, cache, &d_out, nullptr, grads);
      }
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << (student ? "student" : "teacher") << " loss became non-finite at epoch " << epoch
           << ", batch starting at sample " << start << " (loss=" << loss << ")";
        throw TrainingError(os.str());
      }
      adam_step(params, grads, state.optimizer, cfg.learning_rate, trainable);
      sum += loss * static_cast<double>(refs.size());
      seen += refs.size();
    }
    const double mean = sum / static_cast<double>(seen);
    state.loss_history.push_back(mean);
    state.epoch = epoch;
    params.stage = state.stage;
    if (callbacks.on_epoch) callbacks.on_epoch(epoch, mean, params);
  }
  params.stage = state.stage;
  return {std::move(params), std::move(state)};
}

void check_config_matches(const ModelParams& params, const ExperimentConfig& cfg) {
  if (params.fingerprint != config_fingerprint(cfg))
    throw ConfigError("model parameters were built for a different configuration");
}

}  // namespace

std::pair<ModelParams, TrainState> train_teacher_from(ModelParams params,
                                                      std::span<const VideoSequence> videos,
                                                      std::span<const OverlayEvent> bank,
                                                      const ExperimentConfig& cfg,
                                                      std::uint64_t seed,
                                                      const TrainCallbacks& callbacks) {
  validate_config(cfg);
  check_config_matches(params, cfg);
  params.config = cfg;
  return run_stage(std::move(params), Phase::teacher, videos, bank, cfg, seed, callbacks);
}

std::pair<ModelParams, TrainState> train_teacher(std::span<const VideoSequence> videos,
                                                 std::span<const OverlayEvent> bank,
                                                 const ExperimentConfig& cfg, std::uint64_t seed,
                                                 const TrainCallbacks& callbacks) {
  return train_teacher_from(init_model(cfg, seed), videos, bank, cfg, seed, callbacks);
}

std::pair<ModelParams, TrainState> distill_student(std::span<const VideoSequence> videos,
                                                   std::span<const OverlayEvent> bank,
                                                   const ExperimentConfig& cfg,
                                                   const ModelParams& teacher, std::uint64_t seed,
                                                   const TrainCallbacks& callbacks) {
  validate_config(cfg);
  if (teacher.stage == Stage::initialized)
    throw TrainingError("distill_student needs a trained teacher (checkpoint stage is 'init')");
  check_config_matches(teacher, cfg);
  ModelParams params = teacher;
  params.config = cfg;
  return run_stage(std::move(params), Phase::student, videos, bank, cfg, seed, callbacks);
}

}  // namespace sdmae
