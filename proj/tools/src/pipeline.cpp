#include "sdmae_cli/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "sdmae/checkpoint.hpp"
#include "sdmae/error.hpp"
#include "sdmae/png_io.hpp"
#include "sdmae/train.hpp"

namespace sdmae::cli {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentConfig read_run_config(const RunPaths& run, const std::vector<Override>& overrides) {
  if (!fs::exists(run.config()))
    throw ConfigError("run directory has no config.resolved: " + run.root.string());
  return load_config(run.config(), overrides, false);
}

std::vector<OverlayEvent> load_bank(const fs::path& data_root) {
  const fs::path bank = data_root / "bank";
  if (!fs::is_directory(bank)) return {};
  return load_event_bank(bank);
}

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrainCallbacks epoch_logger(std::ostream& log, const char* stage, int epochs, const RunPaths& run,
                            int checkpoint_every) {
  TrainCallbacks cb;
  auto t0 = std::chrono::steady_clock::now();
  cb.on_epoch = [&log, stage, epochs, t0, run, checkpoint_every](int epoch, double loss, const ModelParams& p) {
    log << stage << " epoch " << epoch << "/" << epochs << "  loss " << std::setprecision(6) << loss
        << "  " << std::fixed << std::setprecision(1) << seconds_since(t0) << "s" << std::defaultfloat
        << std::endl;
    if (checkpoint_every > 0 && epoch % checkpoint_every == 0 && epoch < epochs)
      save_checkpoint(run.epoch_checkpoint(stage, epoch), p);
  };
  return cb;
}

}  // namespace

void write_loss_log(const fs::path& path, const std::vector<double>& history) {
  std::string text = "epoch,mean_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) text += std::to_string(i + 1) + "," + real(history[i]) + "\n";
  write_text(path, text);
}

std::vector<double> read_loss_log(const fs::path& path) {
  const auto rows = read_csv(path);
  std::vector<double> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw ParseError("malformed loss log " + path.string());
    out.push_back(std::stod(rows[i][1]));
  }
  return out;
}

void write_scores_csv(const fs::path& path, const VideoSequence& video, const ScoreSeries& series) {
  if (series.raw.size() != video.frames.size() || series.smoothed.size() != video.frames.size())
    throw ShapeError("score series length does not match video '" + video.video_id + "'");
  std::string text = "frame_index,raw_score,smoothed_score\n";
  for (std::size_t i = 0; i < video.frames.size(); ++i)
    text += std::to_string(video.frames[i].index) + "," + real(series.raw[i]) + "," + real(series.smoothed[i]) + "\n";
  write_text(path, text);
}

ScoreSeries read_scores_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() != 3 || rows[0][0] != "frame_index")
    throw ParseError("not a score file: " + path.string());
  ScoreSeries s;
  s.video_id = path.stem().string();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw ParseError(path.string() + ": line " + std::to_string(i + 1) + " has "
                                              + std::to_string(rows[i].size()) + " fields");
    s.raw.push_back(std::stod(rows[i][1]));
    s.smoothed.push_back(std::stod(rows[i][2]));
  }
  return s;
}

StageResult train_teacher_run(const fs::path& data, const RunPaths& run, const ExperimentConfig& cfg,
                              std::ostream& log, int checkpoint_every) {
  validate_config(cfg);
  const auto videos = load_split(data / "train", cfg);
  const auto bank = load_bank(data);
  fs::create_directories(run.root);
  write_text(run.config(), serialize_config(cfg));
  const auto t0 = std::chrono::steady_clock::now();
  auto [params, state] = train_teacher(videos, bank, cfg, cfg.seed,
                                       epoch_logger(log, "teacher", cfg.teacher_epochs, run, checkpoint_every));
  StageResult r{std::move(params), state.loss_history, seconds_since(t0)};
  write_loss_log(run.train_log(), r.losses);
  save_checkpoint(run.teacher_checkpoint(), r.params);
  return r;
}

StageResult distill_run(const fs::path& data, const RunPaths& run, const ExperimentConfig& cfg,
                        std::ostream& log, int checkpoint_every) {
  if (!fs::exists(run.teacher_checkpoint()))
    throw TrainingError("no teacher checkpoint in " + run.root.string() + "; run train-teacher first");
  const ModelParams teacher = load_checkpoint(run.teacher_checkpoint(), cfg);
  const auto videos = load_split(data / "train", cfg);
  const auto bank = load_bank(data);
  const auto t0 = std::chrono::steady_clock::now();
  auto [params, state] = distill_student(videos, bank, cfg, teacher, cfg.seed,
                                         epoch_logger(log, "student", cfg.student_epochs, run, checkpoint_every));
  StageResult r{std::move(params), state.loss_history, seconds_since(t0)};
  write_loss_log(run.distill_log(), r.losses);
  save_checkpoint(run.student_checkpoint(), r.params);
  return r;
}

ModelParams load_run_model(const RunPaths& run, const ExperimentConfig& cfg, const std::string& which) {
  if (which == "init") {
    ModelParams p = init_model(cfg, cfg.seed);
    return p;
  }
  if (which == "student" || (which == "auto" && fs::exists(run.student_checkpoint())))
    return load_checkpoint(run.student_checkpoint(), cfg);
  if (which == "teacher" || which == "auto") {
    if (!fs::exists(run.teacher_checkpoint()))
      throw TrainingError("no checkpoint in " + run.root.string() + "; run train-teacher first");
    return load_checkpoint(run.teacher_checkpoint(), cfg);
  }
  throw ConfigError("unknown checkpoint '" + which + "' (expected auto, teacher, student or init)");
}

std::vector<ScoreSeries> score_run(const fs::path& data, const ModelParams& params,
                                   const ExperimentConfig& cfg, const fs::path& out,
                                   const ScoreRequest& request) {
  const auto videos = load_split(data / "test", cfg);
  fs::create_directories(out);
  std::vector<ScoreSeries> all;
  for (const auto& video : videos) {
    VideoScores vs = score_video(params, video, cfg, request.options);
    write_scores_csv(out / (video.video_id + ".csv"), video, vs.series);
    if (request.write_maps) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& m : vs.maps)
        for (double v : m.values.data()) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      const fs::path dir = out / "maps" / video.video_id;
      fs::create_directories(dir);
      const double span = hi > lo ? hi - lo : 1.0;
      for (const auto& m : vs.maps) {
        Image scaled = m.values;
        for (double& v : scaled.data()) v = (v - lo) / span;
        write_png(dir / frame_file_name(m.index), scaled);
      }
      write_text(dir / "range.txt", "min=" + real(lo) + "\nmax=" + real(hi) + "\n");
    }
    if (request.localize_threshold) {
      std::string text = "frame_index,x0,y0,x1,y1\n";
      for (const auto& m : vs.maps)
        for (const auto& r : localize(m, cfg.patch_size, *request.localize_threshold))
          text += std::to_string(m.index) + "," + std::to_string(r.x0) + "," + std::to_string(r.y0) + "," +
                  std::to_string(r.x1) + "," + std::to_string(r.y1) + "\n";
      write_text(out / (video.video_id + "_regions.csv"), text);
    }
    all.push_back(std::move(vs.series));
  }
  return all;
}

std::vector<std::string> test_video_ids(const fs::path& data) {
  const fs::path dir = data / "test";
  if (!fs::is_directory(dir)) throw DataError("missing directory " + dir.string());
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

EvalResult evaluate_scores(const fs::path& data, const fs::path& scores_dir) {
  std::vector<LabelledSeries> videos;
  for (const auto& id : test_video_ids(data)) {
    const fs::path csv = scores_dir / (id + ".csv");
    if (!fs::exists(csv)) throw DataError("video '" + id + "' has no score file in " + scores_dir.string());
    const fs::path labels = data / "test_labels" / (id + ".txt");
    if (!fs::exists(labels)) throw DataError("video '" + id + "' has no label file " + labels.string());
    LabelledSeries ls{read_scores_csv(csv), read_labels(labels)};
    ls.series.video_id = id;
    videos.push_back(std::move(ls));
  }
  return evaluate(videos);
}

}  // namespace sdmae::cli
