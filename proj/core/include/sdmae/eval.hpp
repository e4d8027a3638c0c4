#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdmae/infer.hpp"

namespace sdmae {

/// ROC-AUC through the rank statistic; ties earn half credit.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct LabelledSeries {
  ScoreSeries series;
  std::vector<int> labels;
};

struct EvalResult {
  double micro_auc = 0.0;
  double macro_auc = 0.0;
  std::map<std::string, double> per_video_auc;
  std::vector<std::string> counted;
  std::vector<std::string> skipped;  ///< single-class videos, left out of macro
  std::size_t frames = 0;
};

/// Micro AUC over concatenated smoothed scores, macro over per-video AUCs.
EvalResult evaluate(std::span<const LabelledSeries> videos);

std::string format_report(const EvalResult& result);
std::string format_key_values(const EvalResult& result);
EvalResult parse_key_values(const std::string& text);

}  // namespace sdmae
