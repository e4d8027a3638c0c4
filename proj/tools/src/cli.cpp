#include "sdmae_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "sdmae/bench.hpp"
#include "sdmae/error.hpp"
#include "sdmae/png_io.hpp"
#include "sdmae/toy.hpp"
#include "sdmae_cli/pipeline.hpp"
#include "sdmae_cli/plot.hpp"

namespace sdmae::cli {

namespace {

std::vector<Override> parse_overrides(const std::vector<std::string>& items) {
  std::vector<Override> out;
  for (const auto& s : items) out.push_back(parse_override(s));
  return out;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- make-toy ----

struct ToyArgs {
  std::string out;
  std::uint64_t seed = 7;
  ToyParams params;
};

int cmd_make_toy(const ToyArgs& a, std::ostream& out) {
  const ToyManifest m = generate_toy_dataset(a.out, a.params, a.seed);
  out << m.to_text();
  return kExitOk;
}

// ---- train-teacher / distill ----

struct TrainArgs {
  std::string data;
  std::string run;
  std::string config;
  std::string preset;
  std::vector<std::string> set;
  int epochs = 0;
  std::int64_t seed = -1;
  int checkpoint_every = 0;
};

ExperimentConfig train_config(const TrainArgs& a) {
  std::vector<Override> ov;
  if (!a.preset.empty()) ov.emplace_back("preset", a.preset);
  for (auto& o : parse_overrides(a.set)) ov.push_back(o);
  if (a.epochs > 0) ov.emplace_back("teacher_epochs", std::to_string(a.epochs));
  if (a.seed >= 0) ov.emplace_back("seed", std::to_string(a.seed));
  return load_config(a.config, ov);
}

int cmd_train_teacher(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = train_config(a);
  const StageResult r = train_teacher_run(a.data, RunPaths{a.run}, cfg, err, a.checkpoint_every);
  out << "teacher trained: " << r.losses.size() << " epochs, final loss " << r.losses.back() << ", "
      << fixed(r.seconds, 1) << " s\n";
  return kExitOk;
}

int cmd_distill(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const RunPaths run{a.run};
  std::vector<Override> ov = parse_overrides(a.set);
  if (a.epochs > 0) ov.emplace_back("student_epochs", std::to_string(a.epochs));
  ExperimentConfig cfg = read_run_config(run, ov);
  const StageResult r = distill_run(a.data, run, cfg, err, a.checkpoint_every);
  if (!ov.empty()) write_text(run.config(), serialize_config(cfg));
  out << "student distilled: " << r.losses.size() << " epochs, final loss " << r.losses.back() << ", "
      << fixed(r.seconds, 1) << " s\n";
  return kExitOk;
}

// ---- score ----

struct ScoreArgs {
  std::string data;
  std::string run;
  std::string out;
  std::string strategy;
  std::string checkpoint = "auto";
  std::vector<std::string> set;
  int batch = 16;
  bool maps = false;
  double localize = -1.0;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const RunPaths run{a.run};
  std::vector<Override> ov = parse_overrides(a.set);
  if (!a.strategy.empty()) ov.emplace_back("score_strategy", a.strategy);
  const ExperimentConfig cfg = read_run_config(run, ov);
  const ModelParams params = load_run_model(run, cfg, a.checkpoint);
  ScoreRequest req;
  req.options.batch = a.batch;
  req.options.allow_untrained = a.checkpoint == "init";
  req.write_maps = a.maps;
  if (a.localize >= 0.0) req.localize_threshold = a.localize;
  const std::filesystem::path dest = a.out.empty() ? run.scores() : std::filesystem::path(a.out);
  const auto series = score_run(a.data, params, cfg, dest, req);
  out << "scored " << series.size() << " videos with " << to_string(cfg.score_strategy) << " ("
      << to_string(params.stage) << " model) -> " << dest.string() << "\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string data;
  std::string run;
  std::string scores;
  std::string name = "eval";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const RunPaths run{a.run};
  const std::filesystem::path scores = a.scores.empty() ? run.scores() : std::filesystem::path(a.scores);
  const EvalResult r = evaluate_scores(a.data, scores);
  const std::string report = format_report(r);
  write_text(run.root / (a.name + ".txt"), report);
  write_text(run.root / (a.name + ".kv"), format_key_values(r));
  out << report;
  return kExitOk;
}

// ---- bench ----

struct BenchArgs {
  std::string run;
  std::string preset = "toy";
  std::vector<std::string> set;
  std::string checkpoint = "init";
  std::string out;
  int frames = 200;
  int batch = 16;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  ExperimentConfig cfg;
  ModelParams params;
  if (!a.run.empty()) {
    const RunPaths run{a.run};
    cfg = read_run_config(run, parse_overrides(a.set));
    params = load_run_model(run, cfg, a.checkpoint);
  } else {
    std::vector<Override> ov{{"preset", a.preset}};
    for (auto& o : parse_overrides(a.set)) ov.push_back(o);
    cfg = load_config("", ov, false);
    params = init_model(cfg, cfg.seed);
  }
  const BenchReport r = run_bench(params, cfg, a.frames, a.batch);
  const std::string text = format_bench(r, cfg);
  std::filesystem::path dest = a.out;
  if (dest.empty() && !a.run.empty()) dest = RunPaths{a.run}.bench();
  if (!dest.empty()) write_text(dest, text);
  out << text;
  return kExitOk;
}

// ---- ablate ----

struct AblateArgs {
  std::string data;
  std::string out;
  std::vector<std::string> set;
  std::uint64_t seed = 42;
  int teacher_epochs = 0;
  int student_epochs = 0;
};

struct Variant {
  bool motion = true;
  double augment = 0.25;
  bool anomaly_maps = true;

  std::string key() const {
    return std::string(motion ? "motion" : "nomotion") + "_p" + std::to_string(std::lround(augment * 100)) +
           (anomaly_maps ? "_maps" : "_nomaps");
  }
};

struct AblationRow {
  std::string table;
  std::string label;
  EvalResult result;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<Override> base_ov{{"preset", "toy"}, {"seed", std::to_string(a.seed)}};
  for (auto& o : parse_overrides(a.set)) base_ov.push_back(o);
  if (a.teacher_epochs > 0) base_ov.emplace_back("teacher_epochs", std::to_string(a.teacher_epochs));
  if (a.student_epochs > 0) base_ov.emplace_back("student_epochs", std::to_string(a.student_epochs));
  const std::filesystem::path root = a.out;
  std::filesystem::create_directories(root);

  std::map<std::string, bool> trained;
  auto config_for = [&](const Variant& v) {
    auto ov = base_ov;
    ov.emplace_back("use_motion_weights", v.motion ? "true" : "false");
    ov.emplace_back("augment_probability", std::to_string(v.augment));
    ov.emplace_back("predict_anomaly_map", v.anomaly_maps ? "true" : "false");
    return load_config("", ov, false);
  };
  // trains teacher + student once per variant
  auto ensure = [&](const Variant& v) {
    const RunPaths run{root / v.key()};
    if (trained[v.key()]) return run;
    const ExperimentConfig cfg = config_for(v);
    err << "ablate: training " << v.key() << "\n";
    train_teacher_run(a.data, run, cfg, err);
    distill_run(a.data, run, cfg, err);
    trained[v.key()] = true;
    return run;
  };
  auto measure = [&](const Variant& v, ScoreStrategy s, const std::string& which) {
    const RunPaths run = ensure(v);
    ExperimentConfig cfg = config_for(v);
    cfg.score_strategy = s;
    const ModelParams params = load_run_model(run, cfg, which);
    const std::filesystem::path dest = run.root / ("scores_" + std::string(to_string(s)));
    score_run(a.data, params, cfg, dest, ScoreRequest{});
    return evaluate_scores(a.data, dest);
  };

  std::vector<AblationRow> rows;
  // component ablation: each row adds one component
  const Variant vanilla{false, 0.0, false};
  const Variant motion{true, 0.0, false};
  const Variant synthetic{true, 0.25, false};
  const Variant full{true, 0.25, true};
  rows.push_back({"components", "vanilla masked AE", measure(vanilla, ScoreStrategy::T, "teacher")});
  rows.push_back({"components", "+ motion weights", measure(motion, ScoreStrategy::T, "teacher")});
  rows.push_back({"components", "+ self-distillation", measure(motion, ScoreStrategy::T_TSD, "student")});
  rows.push_back({"components", "+ synthetic data", measure(synthetic, ScoreStrategy::T_TSD, "student")});
  rows.push_back({"components", "+ anomaly maps", measure(full, ScoreStrategy::T_TSD, "student")});
  // combination strategies on the full model
  for (ScoreStrategy s : {ScoreStrategy::T, ScoreStrategy::T_S, ScoreStrategy::T_TSD, ScoreStrategy::T_S_TSD})
    rows.push_back({"strategies", std::string(to_string(s)), measure(full, s, "student")});
  // proportion of synthetic samples
  for (double p : {0.0, 0.25, 0.5, 0.75})
    rows.push_back({"augmentation", std::to_string(std::lround(p * 100)) + "%",
                    measure(Variant{true, p, true}, ScoreStrategy::T_TSD, "student")});

  std::ostringstream report;
  report << "ablation on " << a.data << " (toy preset, seed " << a.seed << ")\n";
  std::string current;
  for (const auto& r : rows) {
    if (r.table != current) {
      current = r.table;
      report << "\n[" << current << "]\n" << std::left << std::setw(24) << "row" << "  micro    macro\n";
    }
    report << std::left << std::setw(24) << r.label << "  " << fixed(r.result.micro_auc) << "   "
           << fixed(r.result.macro_auc) << "\n";
  }
  std::string csv = "table,row,micro_auc,macro_auc\n";
  for (const auto& r : rows)
    csv += r.table + "," + r.label + "," + fixed(r.result.micro_auc, 6) + "," + fixed(r.result.macro_auc, 6) + "\n";
  write_text(root / "ablation.txt", report.str());
  write_text(root / "ablation.csv", csv);
  out << report.str();
  return kExitOk;
}

// ---- plot ----

struct PlotArgs {
  std::string data;
  std::string run;
  std::string scores;
  std::string video;
  int overlays = 3;
  double threshold = -1.0;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const RunPaths run{a.run};
  const std::filesystem::path scores = a.scores.empty() ? run.scores() : std::filesystem::path(a.scores);
  std::filesystem::create_directories(run.plots());
  const ExperimentConfig cfg = read_run_config(run);
  std::optional<ModelParams> params;
  if (a.overlays > 0) params = load_run_model(run, cfg, "auto");
  int written = 0;
  for (const auto& video : load_split(std::filesystem::path(a.data) / "test", cfg)) {
    if (!a.video.empty() && video.video_id != a.video) continue;
    const ScoreSeries series = read_scores_csv(scores / (video.video_id + ".csv"));
    std::vector<int> labels;
    const auto label_path = std::filesystem::path(a.data) / "test_labels" / (video.video_id + ".txt");
    if (std::filesystem::exists(label_path)) labels = read_labels(label_path);
    write_text(run.plots() / (video.video_id + "_scores.svg"),
               score_curve_svg(series, labels, video.video_id + " (" + std::string(to_string(cfg.score_strategy)) + ")"));
    ++written;
    if (!params) continue;
    ScoreOptions opt;
    opt.allow_untrained = params->stage == Stage::initialized;
    ScoreRequest req;
    const VideoScores vs = score_video(*params, video, cfg, opt);
    double peak = 0.0;
    for (const auto& m : vs.maps) peak = std::max(peak, *std::max_element(m.values.data().begin(), m.values.data().end()));
    const double threshold = a.threshold >= 0.0 ? a.threshold : 0.5 * peak;
    std::vector<std::size_t> order(vs.maps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return vs.series.smoothed[x] > vs.series.smoothed[y];
    });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(a.overlays)));
    for (std::size_t i : order) {
      const auto regions = localize(vs.maps[i], cfg.patch_size, threshold);
      write_png(run.plots() / (video.video_id + "_" + frame_file_name(video.frames[i].index)),
                overlay_regions(video.frames[i].pixels, regions));
      ++written;
    }
  }
  out << "wrote " << written << " plot files to " << run.plots().string() << "\n";
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-distilled masked autoencoder for video anomaly detection", "sdmae"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  ToyArgs toy;
  auto* make_toy = app.add_subcommand("make-toy", "Generate the synthetic toy dataset and event bank");
  make_toy->add_option("--out", toy.out, "Output directory")->required();
  make_toy->add_option("--seed", toy.seed, "Generator seed")->capture_default_str();
  make_toy->add_option("--train-videos", toy.params.train_videos, "Training videos")->capture_default_str();
  make_toy->add_option("--test-videos", toy.params.test_videos, "Test videos")->capture_default_str();
  make_toy->add_option("--frames", toy.params.frames_per_video, "Frames per video")->capture_default_str();
  make_toy->add_option("--size", toy.params.size, "Frame side in pixels")->capture_default_str();
  make_toy->add_option("--bank-events", toy.params.bank_events, "Events in the overlay bank")->capture_default_str();
  make_toy->add_option("--event-frames", toy.params.event_frames, "Frames per bank event")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-teacher", "Train encoder and teacher decoder");
  train_cmd->add_option("--data", train.data, "Dataset root")->required();
  train_cmd->add_option("--run", train.run, "Run directory")->required();
  train_cmd->add_option("--config", train.config, "Configuration file (key = value)");
  train_cmd->add_option("--preset", train.preset, "Base preset: full or toy");
  train_cmd->add_option("--set", train.set, "Override key=value (repeatable)");
  train_cmd->add_option("--epochs", train.epochs, "Override teacher_epochs");
  train_cmd->add_option("--seed", train.seed, "Override seed");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every, "Also checkpoint every k epochs");

  TrainArgs distill;
  auto* distill_cmd = app.add_subcommand("distill", "Train the student decoder against the frozen teacher");
  distill_cmd->add_option("--data", distill.data, "Dataset root")->required();
  distill_cmd->add_option("--run", distill.run, "Run directory holding a teacher checkpoint")->required();
  distill_cmd->add_option("--set", distill.set, "Override key=value (repeatable)");
  distill_cmd->add_option("--epochs", distill.epochs, "Override student_epochs");
  distill_cmd->add_option("--checkpoint-every", distill.checkpoint_every, "Also checkpoint every k epochs");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Write per-frame anomaly scores for every test video");
  score_cmd->add_option("--data", score.data, "Dataset root")->required();
  score_cmd->add_option("--run", score.run, "Run directory")->required();
  score_cmd->add_option("--out", score.out, "Score directory (default <run>/scores)");
  score_cmd->add_option("--strategy", score.strategy, "T, T_S, T_TSD or T_S_TSD");
  score_cmd->add_option("--checkpoint", score.checkpoint, "auto, teacher, student or init (untrained)")
      ->capture_default_str();
  score_cmd->add_option("--set", score.set, "Override key=value (repeatable)");
  score_cmd->add_option("--batch", score.batch, "Frames per forward pass")->capture_default_str();
  score_cmd->add_flag("--maps", score.maps, "Also write smoothed anomaly maps as PNG");
  score_cmd->add_option("--localize", score.localize, "Write abnormal regions above this map threshold");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Micro and macro frame-level AUC");
  eval_cmd->add_option("--data", ev.data, "Dataset root")->required();
  eval_cmd->add_option("--run", ev.run, "Run directory")->required();
  eval_cmd->add_option("--scores", ev.scores, "Score directory (default <run>/scores)");
  eval_cmd->add_option("--name", ev.name, "Report base name inside the run directory")->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Throughput, parameter count and FLOPs");
  bench_cmd->add_option("--run", bench.run, "Run directory (otherwise an untrained preset model)");
  bench_cmd->add_option("--preset", bench.preset, "Preset when no run is given")->capture_default_str();
  bench_cmd->add_option("--set", bench.set, "Override key=value (repeatable)");
  bench_cmd->add_option("--checkpoint", bench.checkpoint, "Checkpoint to time with --run")->capture_default_str();
  bench_cmd->add_option("--frames", bench.frames, "Frames per timed repetition (>= 100)")->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch, "Batch size for the batched measurement")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Report file (default <run>/bench.txt)");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Component, strategy and augmentation ablations on the toy preset");
  ablate_cmd->add_option("--data", ab.data, "Dataset root")->required();
  ablate_cmd->add_option("--out", ab.out, "Output directory")->required();
  ablate_cmd->add_option("--seed", ab.seed, "Seed for every variant")->capture_default_str();
  ablate_cmd->add_option("--set", ab.set, "Override key=value (repeatable)");
  ablate_cmd->add_option("--teacher-epochs", ab.teacher_epochs, "Override teacher_epochs");
  ablate_cmd->add_option("--student-epochs", ab.student_epochs, "Override student_epochs");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Score curves (SVG) and localisation overlays (PNG)");
  plot_cmd->add_option("--data", plot.data, "Dataset root")->required();
  plot_cmd->add_option("--run", plot.run, "Run directory")->required();
  plot_cmd->add_option("--scores", plot.scores, "Score directory (default <run>/scores)");
  plot_cmd->add_option("--video", plot.video, "Only this test video");
  plot_cmd->add_option("--overlays", plot.overlays, "Overlay images per video (top scores)")->capture_default_str();
  plot_cmd->add_option("--threshold", plot.threshold, "Region threshold (default half the video's peak)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << " (see --help)\n";
    return kExitUsage;
  }

  try {
    if (*make_toy) return cmd_make_toy(toy, out);
    if (*train_cmd) return cmd_train_teacher(train, out, err);
    if (*distill_cmd) return cmd_distill(distill, out, err);
    if (*score_cmd) return cmd_score(score, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*ablate_cmd) return cmd_ablate(ab, out, err);
    if (*plot_cmd) return cmd_plot(plot, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_command(const std::vector<std::string>& args) { return run_command(args, std::cout, std::cerr); }

}  // namespace sdmae::cli
