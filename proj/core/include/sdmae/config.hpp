#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdmae {

/// How teacher, student and teacher-student discrepancy terms are combined
/// into the per-pixel anomaly map.
enum class ScoreStrategy {
  T,       ///< teacher reconstruction error
  T_S,     ///< teacher + student reconstruction errors
  T_TSD,   ///< teacher error + teacher-student discrepancy (default)
  T_S_TSD  ///< all three terms
};

std::string_view to_string(ScoreStrategy s);
ScoreStrategy parse_strategy(std::string_view text);
/// True when the strategy consumes the student reconstruction.
bool uses_student(ScoreStrategy s);

struct ExperimentConfig {
  // geometry
  int patch_size = 16;
  int frame_height = 256;
  int frame_width = 256;
  int channels = 3;
  double mask_ratio = 0.5;

  // architecture
  int encoder_blocks = 3;
  int encoder_dim = 256;
  int teacher_decoder_blocks = 3;
  int student_decoder_blocks = 1;
  int decoder_dim = 128;
  int attention_heads = 4;
  int mlp_ratio = 4;
  bool predict_anomaly_map = true;

  // training
  bool use_motion_weights = true;
  bool loss_on_masked_only = false;
  double augment_probability = 0.25;
  double learning_rate = 1e-4;
  int batch_size = 100;
  int teacher_epochs = 100;
  int student_epochs = 40;

  // inference
  ScoreStrategy score_strategy = ScoreStrategy::T_TSD;
  std::array<int, 3> smooth_kernel{5, 5, 5};  ///< (time, height, width)
  double gaussian_sigma = 3.0;
  double inference_mask_ratio = 0.5;

  std::uint64_t seed = 42;

  int grid_height() const { return frame_height / patch_size; }
  int grid_width() const { return frame_width / patch_size; }
  int token_count() const { return grid_height() * grid_width(); }
  /// Channels emitted by the output heads.
  int output_channels() const { return channels + (predict_anomaly_map ? 1 : 0); }
  /// Tokens the encoder sees for a given masking ratio.
  int visible_count(double ratio) const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Defaults from the full-size setting (Avenue-style patch 16, 256/128 dims).
ExperimentConfig full_defaults();

/// Desk-scale preset: 64x64 grayscale, patch 8, 64/32 dims, 10 + 4 epochs.
ExperimentConfig toy_preset();

/// Named presets accepted by the `preset` key: "full", "toy".
ExperimentConfig preset(std::string_view name);

/// Throws ConfigError naming the field and the violated rule.
const ExperimentConfig& validate_config(const ExperimentConfig& cfg);

/// Prefix for environment overrides, e.g. SDMAE_MASK_RATIO=0.25.
inline constexpr std::string_view kEnvPrefix = "SDMAE_";

using Override = std::pair<std::string, std::string>;

/// Parses "key=value".
Override parse_override(std::string_view text);

/// Resolution order, lowest to highest: preset defaults, SDMAE_* environment,
/// file, overrides. An empty path means "no file". `inference_mask_ratio`
/// follows `mask_ratio` unless set explicitly.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<Override>& overrides = {},
                             bool read_environment = true);

/// Parses the flat key-value format from a string.
ExperimentConfig parse_config(std::string_view text,
                              const std::vector<Override>& overrides = {});

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// One line per key: name, default (full preset), description.
struct ConfigKeyDoc {
  std::string_view key;
  std::string_view description;
};
const std::vector<ConfigKeyDoc>& config_key_docs();

/// Hash of every field that determines parameter shapes.
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);

}  // namespace sdmae
