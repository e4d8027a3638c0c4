#pragma once

#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdmae/config.hpp"
#include "sdmae/data.hpp"
#include "sdmae/eval.hpp"
#include "sdmae/infer.hpp"
#include "sdmae/model.hpp"

namespace sdmae::cli {

namespace fs = std::filesystem;

/// Fixed layout of a run directory.
struct RunPaths {
  fs::path root;

  fs::path config() const { return root / "config.resolved"; }
  fs::path train_log() const { return root / "train_log.csv"; }
  fs::path distill_log() const { return root / "distill_log.csv"; }
  fs::path teacher_checkpoint() const { return root / "checkpoints" / "teacher"; }
  fs::path student_checkpoint() const { return root / "checkpoints" / "student"; }
  /// Intermediate checkpoint, e.g. checkpoints/teacher_epoch003.
  fs::path epoch_checkpoint(const std::string& stage, int epoch) const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_epoch%03d", epoch);
    return root / "checkpoints" / (stage + buf);
  }
  fs::path scores() const { return root / "scores"; }
  fs::path eval_text() const { return root / "eval.txt"; }
  fs::path eval_kv() const { return root / "eval.kv"; }
  fs::path bench() const { return root / "bench.txt"; }
  fs::path plots() const { return root / "plots"; }
};

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Reads `config.resolved`; environment variables are not consulted so a run
/// directory always means the same thing.
ExperimentConfig read_run_config(const RunPaths& run, const std::vector<Override>& overrides = {});

/// `<data>/bank` when present; empty otherwise.
std::vector<OverlayEvent> load_bank(const fs::path& data_root);

void write_loss_log(const fs::path& path, const std::vector<double>& history);
std::vector<double> read_loss_log(const fs::path& path);

/// `frame_index,raw_score,smoothed_score`, 17 significant digits.
void write_scores_csv(const fs::path& path, const VideoSequence& video, const ScoreSeries& series);
ScoreSeries read_scores_csv(const fs::path& path);

struct StageResult {
  ModelParams params;
  std::vector<double> losses;
  double seconds = 0.0;
};

/// Trains the teacher on `<data>/train`, writes the run config, the loss log
/// and the teacher checkpoint. `log` receives one line per epoch. With
/// `checkpoint_every` > 0 an extra checkpoint is kept every that many epochs.
StageResult train_teacher_run(const fs::path& data, const RunPaths& run, const ExperimentConfig& cfg,
                              std::ostream& log, int checkpoint_every = 0);

/// Distils the student from the run's teacher checkpoint.
StageResult distill_run(const fs::path& data, const RunPaths& run, const ExperimentConfig& cfg,
                        std::ostream& log, int checkpoint_every = 0);

struct ScoreRequest {
  ScoreOptions options;
  bool write_maps = false;                ///< PNG maps + range sidecar per video
  std::optional<double> localize_threshold;  ///< region CSV per video
};

/// Scores every test video and writes `<out>/<video_id>.csv`.
std::vector<ScoreSeries> score_run(const fs::path& data, const ModelParams& params,
                                   const ExperimentConfig& cfg, const fs::path& out,
                                   const ScoreRequest& request);

/// Loads the newest checkpoint of a run (student, else teacher).
ModelParams load_run_model(const RunPaths& run, const ExperimentConfig& cfg,
                           const std::string& which = "auto");

/// Pairs score CSVs with `<data>/test_labels` and evaluates.
EvalResult evaluate_scores(const fs::path& data, const fs::path& scores_dir);

/// Test video ids in `<data>/test`.
std::vector<std::string> test_video_ids(const fs::path& data);

}  // namespace sdmae::cli
