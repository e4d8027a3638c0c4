#pragma once

#include <filesystem>

#include "sdmae/config.hpp"
#include "sdmae/model.hpp"

namespace sdmae {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes `dir/params.bin` (named little-endian float64 arrays) and
/// `dir/manifest.txt` (format version, config fingerprint, stage, seed).
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params);

/// Loads a checkpoint and verifies its fingerprint against `cfg`.
ModelParams load_checkpoint(const std::filesystem::path& dir, const ExperimentConfig& cfg);

}  // namespace sdmae
