#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdmae/config.hpp"
#include "sdmae/image.hpp"
#include "sdmae/nn.hpp"
#include "sdmae/patch.hpp"
#include "sdmae/tensor.hpp"

namespace sdmae {

/// Shared encoder: d x d stride-d convolutional token embedding applied to the
/// whole frame, learned positions, transformer blocks, final norm.
struct EncoderParams {
  nn::Linear embed;  ///< (d*d*c x encoder_dim)
  Tensor pos;        ///< (n x encoder_dim)
  std::vector<nn::Block> blocks;
  nn::LayerNorm norm;
};

/// Teacher decoder: width reduction, mask-token insertion, learned positions,
/// transformer blocks, norm and per-patch output head.
struct TeacherDecoderParams {
  nn::Linear embed;   ///< (encoder_dim x decoder_dim)
  Tensor mask_token;  ///< (1 x decoder_dim)
  Tensor pos;         ///< (n x decoder_dim)
  std::vector<nn::Block> blocks;
  nn::LayerNorm norm;
  nn::Linear head;    ///< (decoder_dim x d*d*c')
};

/// Student decoder: consumes the teacher decoder's first-block output.
struct StudentDecoderParams {
  std::vector<nn::Block> blocks;
  nn::LayerNorm norm;
  nn::Linear head;
};

enum class Stage { initialized, teacher, student };
std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

enum class ParamGroup { encoder, teacher_decoder, student_decoder };

struct ModelParams {
  ExperimentConfig config;
  std::uint64_t fingerprint = 0;
  std::uint64_t seed = 0;
  Stage stage = Stage::initialized;
  EncoderParams encoder;
  TeacherDecoderParams teacher;
  StudentDecoderParams student;
};

/// Calls fn(name, tensor, group) for every learnable tensor in a fixed order.
/// Works for const and mutable ModelParams.
template <typename Params, typename Fn>
void visit_parameters(Params& p, Fn&& fn) {
  auto linear = [&](const std::string& name, auto& l, ParamGroup g) {
    fn(name + ".weight", l.weight, g);
    if (l.bias.size() > 0) fn(name + ".bias", l.bias, g);
  };
  auto norm = [&](const std::string& name, auto& n, ParamGroup g) {
    fn(name + ".gamma", n.gamma, g);
    fn(name + ".beta", n.beta, g);
  };
  auto block = [&](const std::string& name, auto& b, ParamGroup g) {
    norm(name + ".norm1", b.norm1, g);
    linear(name + ".q", b.q, g);
    linear(name + ".k", b.k, g);
    linear(name + ".v", b.v, g);
    linear(name + ".proj", b.proj, g);
    norm(name + ".norm2", b.norm2, g);
    linear(name + ".fc1", b.fc1, g);
    linear(name + ".fc2", b.fc2, g);
  };
  constexpr auto E = ParamGroup::encoder;
  constexpr auto T = ParamGroup::teacher_decoder;
  constexpr auto S = ParamGroup::student_decoder;
  linear("encoder.embed", p.encoder.embed, E);
  fn(std::string("encoder.pos"), p.encoder.pos, E);
  for (std::size_t i = 0; i < p.encoder.blocks.size(); ++i)
    block("encoder.blocks." + std::to_string(i), p.encoder.blocks[i], E);
  norm("encoder.norm", p.encoder.norm, E);
  linear("teacher.embed", p.teacher.embed, T);
  fn(std::string("teacher.mask_token"), p.teacher.mask_token, T);
  fn(std::string("teacher.pos"), p.teacher.pos, T);
  for (std::size_t i = 0; i < p.teacher.blocks.size(); ++i)
    block("teacher.blocks." + std::to_string(i), p.teacher.blocks[i], T);
  norm("teacher.norm", p.teacher.norm, T);
  linear("teacher.head", p.teacher.head, T);
  for (std::size_t i = 0; i < p.student.blocks.size(); ++i)
    block("student.blocks." + std::to_string(i), p.student.blocks[i], S);
  norm("student.norm", p.student.norm, S);
  linear("student.head", p.student.head, S);
}

/// Builds parameter shapes from `cfg` without random initialisation
/// (weights zero, norms identity). Also used for gradient buffers.
ModelParams allocate_model(const ExperimentConfig& cfg);

/// Truncated-normal(0.02) projections, positions and mask token; zero
/// biases; identity norms. Deterministic in (cfg, seed).
ModelParams init_model(const ExperimentConfig& cfg, std::uint64_t seed);

/// Zero tensors with the same shapes as `params`.
ModelParams zeros_like(const ModelParams& params);

std::size_t count_parameters(const ModelParams& params);
std::size_t count_parameters(const ModelParams& params, ParamGroup group);

/// Closed-form parameter count from the configuration alone.
std::size_t analytic_parameter_count(const ExperimentConfig& cfg);

/// FNV-1a over the raw bytes of every tensor in `group`s, in visit order.
std::uint64_t hash_parameters(const ModelParams& params, std::span<const ParamGroup> groups);

/// Multiply-adds of one forward pass (encoder at the visible-token count for
/// cfg.mask_ratio, both decoders at n tokens), counted as 2 FLOPs each.
double estimate_flops(const ExperimentConfig& cfg);

/// Activations kept for backpropagation.
struct ForwardCache {
  int batch = 0;
  int tokens = 0;
  int visible = 0;
  Tensor patches;                   ///< (B*n x d*d*c)
  std::vector<int> visible_rows;    ///< rows of the (B*n) grid fed to the encoder
  std::vector<int> masked_rows;
  std::vector<nn::BlockCache> encoder_blocks;
  nn::NormCache encoder_norm;
  Tensor encoded;                   ///< encoder output after norm (B*v x E)
  Tensor decoder_input;             ///< after mask tokens and positions (B*n x D)
  std::vector<nn::BlockCache> teacher_blocks;
  nn::NormCache teacher_norm;
  Tensor teacher_normed;
  Tensor branch;                    ///< teacher block-1 output, student input
  std::vector<nn::BlockCache> student_blocks;
  nn::NormCache student_norm;
  Tensor student_normed;
};

struct ForwardOutput {
  Tensor teacher;  ///< (B*n x d*d*c')
  Tensor student;  ///< empty when the student branch was skipped
};

/// Batched forward. `patches` stacks B frames' patch rows (B*n x d*d*c);
/// every plan must have the same visible count. One encoder evaluation
/// serves both decoders.
ForwardOutput forward_batch(const ModelParams& params, const Tensor& patches,
                            std::span<const MaskPlan> plans, ForwardCache* cache,
                            bool run_student = true);

/// Single-frame convenience wrapper returning (teacher, student) patch grids.
std::pair<PatchGrid, PatchGrid> forward(const ModelParams& params, const Image& frame,
                                        const MaskPlan& plan);

/// Accumulates gradients into `grads`. `d_teacher` flows into the encoder and
/// teacher decoder; `d_student` reaches only the student decoder (its input,
/// the teacher's first-block output, is treated as a constant).
void backward(const ModelParams& params, const ForwardCache& cache, const Tensor* d_teacher,
              const Tensor* d_student, ModelParams& grads);

/// Number of encoder evaluations performed by forward_batch in this process.
std::uint64_t encoder_pass_count();

}  // namespace sdmae
