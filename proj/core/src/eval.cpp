#include "sdmae/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sdmae/error.hpp"

namespace sdmae {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ShapeError("roc_auc: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(labels.size()) + " labels");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("roc_auc: labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_auc: undefined for single-class labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // sum of 1-based average ranks of the positives
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum += avg;
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

EvalResult evaluate(std::span<const LabelledSeries> videos) {
  if (videos.empty()) throw DataError("evaluate: no videos");
  EvalResult result;
  std::vector<double> all_scores;
  std::vector<int> all_labels;
  double macro_sum = 0.0;
  for (const auto& v : videos) {
    const auto& s = v.series.smoothed;
    if (s.size() != v.labels.size())
      throw DataError("video '" + v.series.video_id + "': " + std::to_string(s.size()) +
                      " scores but " + std::to_string(v.labels.size()) + " labels");
    all_scores.insert(all_scores.end(), s.begin(), s.end());
    all_labels.insert(all_labels.end(), v.labels.begin(), v.labels.end());
    const auto pos = std::count(v.labels.begin(), v.labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(v.labels.size())) {
      result.skipped.push_back(v.series.video_id);
      continue;
    }
    const double auc = roc_auc(s, v.labels);
    result.per_video_auc[v.series.video_id] = auc;
    result.counted.push_back(v.series.video_id);
    macro_sum += auc;
  }
  result.frames = all_scores.size();
  result.micro_auc = roc_auc(all_scores, all_labels);
  result.macro_auc = result.counted.empty() ? result.micro_auc : macro_sum / static_cast<double>(result.counted.size());
  return result;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

std::string format_report(const EvalResult& r) {
  std::ostringstream out;
  out << "frames      " << r.frames << "\n";
  out << "micro AUC   " << fmt(r.micro_auc) << "\n";
  if (r.counted.empty())
    out << "macro AUC   " << fmt(r.macro_auc) << "  (no two-class video; equals micro)\n";
  else
    out << "macro AUC   " << fmt(r.macro_auc) << "  (" << r.counted.size() << " videos)\n";
  for (const auto& [id, auc] : r.per_video_auc) out << "  " << id << "  " << fmt(auc) << "\n";
  for (const auto& id : r.skipped) out << "  " << id << "  skipped (single-class labels)\n";
  return out.str();
}

std::string format_key_values(const EvalResult& r) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.micro_auc);
  out << "micro_auc=" << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", r.macro_auc);
  out << "macro_auc=" << buf << "\n";
  out << "frames=" << r.frames << "\n";
  for (const auto& [id, auc] : r.per_video_auc) {
    std::snprintf(buf, sizeof buf, "%.17g", auc);
    out << "video." << id << "=" << buf << "\n";
  }
  for (const auto& id : r.skipped) out << "skipped." << id << "=1\n";
  return out.str();
}

EvalResult parse_key_values(const std::string& text) {
  EvalResult r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "micro_auc") r.micro_auc = std::stod(value);
      else if (key == "macro_auc") r.macro_auc = std::stod(value);
      else if (key == "frames") r.frames = std::stoull(value);
      else if (key.rfind("video.", 0) == 0) {
        r.per_video_auc[key.substr(6)] = std::stod(value);
        r.counted.push_back(key.substr(6));
      } else if (key.rfind("skipped.", 0) == 0) r.skipped.push_back(key.substr(8));
    } catch (const std::exception&) {
      throw ParseError("bad value for '" + key + "' in evaluation file");
    }
  }
  return r;
}

}  // namespace sdmae
