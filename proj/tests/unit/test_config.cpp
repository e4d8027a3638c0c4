#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "sdmae/config.hpp"
#include "sdmae/error.hpp"

using namespace sdmae;
using testing_support::TempDir;

namespace {

ExperimentConfig load_text(const std::string& text, const std::vector<Override>& ov = {}) {
  TempDir dir("cfg");
  const auto path = dir / "exp.cfg";
  std::ofstream(path) << text;
  return load_config(path, ov, false);
}

}  // namespace

TEST(Config, EmptyFileGivesFullTrainingDefaults) {
  const ExperimentConfig cfg = load_text("");
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.batch_size, 100);
  EXPECT_EQ(cfg.teacher_epochs, 100);
  EXPECT_EQ(cfg.student_epochs, 40);
  EXPECT_DOUBLE_EQ(cfg.augment_probability, 0.25);
}

TEST(Config, FullArchitectureDefaults) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.patch_size, 16);
  EXPECT_EQ(cfg.encoder_dim, 256);
  EXPECT_EQ(cfg.decoder_dim, 128);
  EXPECT_EQ(cfg.attention_heads, 4);
  EXPECT_EQ(cfg.encoder_blocks, 3);
  EXPECT_EQ(cfg.teacher_decoder_blocks, 3);
  EXPECT_EQ(cfg.student_decoder_blocks, 1);
  EXPECT_EQ(cfg.score_strategy, ScoreStrategy::T_TSD);
  EXPECT_EQ(cfg.smooth_kernel, (std::array<int, 3>{5, 5, 5}));
  EXPECT_DOUBLE_EQ(cfg.gaussian_sigma, 3.0);
  EXPECT_DOUBLE_EQ(cfg.inference_mask_ratio, cfg.mask_ratio);
}

TEST(Config, ToyPreset) {
  const ExperimentConfig cfg = preset("toy");
  EXPECT_EQ(cfg.frame_height, 64);
  EXPECT_EQ(cfg.frame_width, 64);
  EXPECT_EQ(cfg.patch_size, 8);
  EXPECT_EQ(cfg.channels, 1);
  EXPECT_EQ(cfg.encoder_dim, 64);
  EXPECT_EQ(cfg.decoder_dim, 32);
  EXPECT_EQ(cfg.teacher_epochs, 10);
  EXPECT_EQ(cfg.student_epochs, 4);
  EXPECT_EQ(cfg.batch_size, 16);
  EXPECT_THROW(preset("huge"), ConfigError);
}

TEST(Config, MaskRatioZeroIsValid) {
  const ExperimentConfig cfg = load_text("", {{"mask_ratio", "0"}});
  EXPECT_DOUBLE_EQ(cfg.mask_ratio, 0.0);
  EXPECT_DOUBLE_EQ(cfg.inference_mask_ratio, 0.0);
}

TEST(Config, IndivisibleHeightNamesRule) {
  ExperimentConfig cfg;
  cfg.frame_height = 65;
  try {
    validate_config(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("h not divisible by d"), std::string::npos) << e.what();
  }
}

TEST(Config, MaskRatioOneRejected) {
  ExperimentConfig cfg;
  cfg.mask_ratio = 1.0;
  EXPECT_THROW(validate_config(cfg), ConfigError);
}

TEST(Config, EvenKernelRejected) {
  ExperimentConfig cfg;
  cfg.smooth_kernel = {4, 5, 5};
  try {
    validate_config(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("smooth_kernel"), std::string::npos);
  }
}

TEST(Config, DefaultValidatesUnchangedAndIdempotent) {
  const ExperimentConfig cfg;
  const ExperimentConfig& once = validate_config(cfg);
  EXPECT_EQ(once, ExperimentConfig{});
  EXPECT_EQ(validate_config(once), cfg);
}

TEST(Config, OverridesBeatFileAndFileBeatsPreset) {
  const ExperimentConfig cfg = load_text("preset = toy\nbatch_size = 8\n# comment\nlearning_rate = 0.001\n",
                                         {{"batch_size", "4"}});
  EXPECT_EQ(cfg.batch_size, 4);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-3);
  EXPECT_EQ(cfg.frame_height, 64);
}

TEST(Config, EnvironmentHasLowestPrecedence) {
  ::setenv("SDMAE_BATCH_SIZE", "7", 1);
  ::setenv("SDMAE_TEACHER_EPOCHS", "3", 1);
  TempDir dir("cfgenv");
  std::ofstream(dir / "a.cfg") << "batch_size = 9\n";
  const ExperimentConfig cfg = load_config(dir / "a.cfg", {}, true);
  ::unsetenv("SDMAE_BATCH_SIZE");
  ::unsetenv("SDMAE_TEACHER_EPOCHS");
  EXPECT_EQ(cfg.batch_size, 9);
  EXPECT_EQ(cfg.teacher_epochs, 3);
}

TEST(Config, MissingFileIsError) {
  EXPECT_THROW(load_config("/nonexistent/sdmae.cfg", {}, false), ConfigError);
}

TEST(Config, TypeMismatchNamesKey) {
  try {
    load_text("batch_size = lots\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_text("no_such_key = 1\n"), ParseError);
  EXPECT_THROW(parse_override("novalue"), ParseError);
}

TEST(Config, ExplicitInferenceRatioIsKept) {
  const ExperimentConfig cfg = load_text("mask_ratio = 0.25\ninference_mask_ratio = 0\n");
  EXPECT_DOUBLE_EQ(cfg.mask_ratio, 0.25);
  EXPECT_DOUBLE_EQ(cfg.inference_mask_ratio, 0.0);
}

TEST(Config, SerializeRoundTripRandomConfigs) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ExperimentConfig cfg = rng.bernoulli(0.5) ? toy_preset() : ExperimentConfig{};
    cfg.mask_ratio = rng.uniform(0.0, 0.9);
    cfg.inference_mask_ratio = rng.uniform(0.0, 0.9);
    cfg.learning_rate = rng.uniform(1e-6, 1e-2);
    cfg.augment_probability = rng.uniform();
    cfg.gaussian_sigma = rng.uniform(0.1, 5.0);
    cfg.smooth_kernel = {1 + 2 * static_cast<int>(rng.below(4)), 1 + 2 * static_cast<int>(rng.below(4)), 3};
    cfg.score_strategy = static_cast<ScoreStrategy>(rng.below(4));
    cfg.predict_anomaly_map = rng.bernoulli(0.5);
    cfg.loss_on_masked_only = rng.bernoulli(0.5);
    cfg.seed = rng.next();
    validate_config(cfg);
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg) << serialize_config(cfg);
  }
}

TEST(Config, StrategyNames) {
  for (auto s : {ScoreStrategy::T, ScoreStrategy::T_S, ScoreStrategy::T_TSD, ScoreStrategy::T_S_TSD})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_FALSE(uses_student(ScoreStrategy::T));
  EXPECT_TRUE(uses_student(ScoreStrategy::T_TSD));
  EXPECT_THROW(parse_strategy("teacher"), ParseError);
}

TEST(Config, EveryKeyDocumentedAndSerialized) {
  const std::string text = serialize_config(ExperimentConfig{});
  for (const auto& doc : config_key_docs()) {
    EXPECT_FALSE(doc.description.empty()) << doc.key;
    if (doc.key == "preset") continue;
    EXPECT_NE(text.find(std::string(doc.key) + " ="), std::string::npos) << doc.key;
  }
}

// The defaults table in README.md must agree with the code.
TEST(Config, ReadmeDefaultsTableMatchesCode) {
  std::ifstream in(std::string(SDMAE_SOURCE_DIR) + "/README.md");
  ASSERT_TRUE(in) << "README.md not found";
  std::map<std::string, std::string> table;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("| `", 0) != 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line.substr(1));
    for (std::string cell; std::getline(ss, cell, '|');) cells.push_back(cell);
    if (cells.size() < 3) continue;
    auto strip = [](std::string v) {
      v.erase(0, v.find_first_not_of(" `"));
      v.erase(v.find_last_not_of(" `") + 1);
      return v;
    };
    table[strip(cells[0])] = strip(cells[1]);
  }
  std::istringstream text(serialize_config(full_defaults()));
  int checked = 0;
  for (std::string line; std::getline(text, line);) {
    const auto eq = line.find(" = ");
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    ASSERT_TRUE(table.count(key)) << key << " missing from README";
    EXPECT_EQ(table[key], line.substr(eq + 3)) << key;
    ++checked;
  }
  EXPECT_EQ(checked, static_cast<int>(config_key_docs().size()));
}

TEST(Config, FingerprintTracksShapesOnly) {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.learning_rate = 0.5;
  b.score_strategy = ScoreStrategy::T;
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
  b.decoder_dim = 64;
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
}
