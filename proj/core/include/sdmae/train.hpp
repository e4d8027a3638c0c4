#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sdmae/config.hpp"
#include "sdmae/data.hpp"
#include "sdmae/model.hpp"
#include "sdmae/motion.hpp"
#include "sdmae/patch.hpp"
#include "sdmae/rng.hpp"

namespace sdmae {

/// (1/n) sum_i w_i ||target_i - pred_i||^2 over every patch entry.
double teacher_loss(const PatchGrid& pred, const PatchGrid& target, const TokenWeights& weights);

/// Same form with the teacher output as a constant target.
double student_loss(const PatchGrid& student_pred, const PatchGrid& teacher_pred,
                    const TokenWeights& weights);

/// Weighted patch loss on raw rows, optionally writing dL/dpred scaled by
/// `grad_scale` into `grad` (same shape as pred).
double weighted_patch_loss(const Tensor& pred, const Tensor& target,
                           std::span<const double> weights, Tensor* grad = nullptr,
                           double grad_scale = 1.0);

struct AdamState {
  ModelParams first;
  ModelParams second;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const ModelParams& params);

/// One bias-corrected Adam update restricted to the `trainable` groups.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double learning_rate, std::span<const ParamGroup> trainable);

struct TrainState {
  Stage stage = Stage::teacher;
  int epoch = 0;
  AdamState optimizer;
  Rng rng;
  std::vector<double> loss_history;  ///< mean loss per epoch
};

/// One mini-batch of prepared training rows.
struct PreparedBatch {
  Tensor inputs;   ///< (B*n x d*d*c) possibly composited frames
  Tensor targets;  ///< (B*n x d*d*c') clean frames (+ anomaly channel)
  std::vector<std::vector<double>> weights;  ///< per sample, length n
  std::vector<MaskPlan> plans;
  int augmented = 0;
};

struct FrameRef {
  int video = 0;
  int frame = 0;
};

/// Augmentation, motion weights (fused with the anomaly map when augmented),
/// mask sampling and target construction for a list of frames.
PreparedBatch prepare_batch(std::span<const VideoSequence> videos,
                            std::span<const OverlayEvent> bank, const ExperimentConfig& cfg,
                            std::span<const FrameRef> refs, Rng& rng);

struct TrainCallbacks {
  /// Called after every epoch with the 1-based epoch and its mean loss.
  std::function<void(int epoch, double mean_loss, const ModelParams&)> on_epoch;
};

/// Stage 1: optimises encoder + teacher decoder with the weighted loss.
std::pair<ModelParams, TrainState> train_teacher(std::span<const VideoSequence> videos,
                                                 std::span<const OverlayEvent> bank,
                                                 const ExperimentConfig& cfg, std::uint64_t seed,
                                                 const TrainCallbacks& callbacks = {});

/// Same, starting from given parameters (e.g. a fresh init_model).
std::pair<ModelParams, TrainState> train_teacher_from(ModelParams params,
                                                      std::span<const VideoSequence> videos,
                                                      std::span<const OverlayEvent> bank,
                                                      const ExperimentConfig& cfg,
                                                      std::uint64_t seed,
                                                      const TrainCallbacks& callbacks = {});

/// Stage 2: freezes encoder and teacher decoder, trains the student decoder
/// to reproduce the teacher outputs under the same motion weights.
std::pair<ModelParams, TrainState> distill_student(std::span<const VideoSequence> videos,
                                                   std::span<const OverlayEvent> bank,
                                                   const ExperimentConfig& cfg,
                                                   const ModelParams& teacher, std::uint64_t seed,
                                                   const TrainCallbacks& callbacks = {});

}  // namespace sdmae
