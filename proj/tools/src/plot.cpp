#include "sdmae_cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sdmae::cli {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string score_curve_svg(const ScoreSeries& series, std::span<const int> labels,
                            const std::string& title) {
  constexpr double kW = 800, kH = 260, kLeft = 50, kRight = 20, kTop = 30, kBottom = 40;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  const auto& s = series.smoothed;
  const std::size_t n = s.size();
  double lo = n ? *std::min_element(s.begin(), s.end()) : 0.0;
  double hi = n ? *std::max_element(s.begin(), s.end()) : 1.0;
  if (!(hi > lo)) hi = lo + 1.0;
  auto x_at = [&](double i) { return kLeft + (n > 1 ? i / static_cast<double>(n - 1) : 0.0) * pw; };
  auto y_at = [&](double v) { return kTop + (1.0 - (v - lo) / (hi - lo)) * ph; };

  std::ostringstream out;
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // ground-truth spans
  for (std::size_t i = 0; i < labels.size() && i < n;) {
    if (labels[i] != 1) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < labels.size() && labels[j + 1] == 1) ++j;
    const double x0 = x_at(static_cast<double>(i) - 0.5);
    const double x1 = x_at(static_cast<double>(j) + 0.5);
    std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#f4b6b6\"/>\n",
                  std::max(kLeft, x0), kTop, std::min(kLeft + pw, x1) - std::max(kLeft, x0), ph);
    out << buf;
    i = j + 1;
  }
  std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" stroke=\"black\"/>\n",
                kLeft, kTop, pw, ph);
  out << buf;
  out << "<polyline fill=\"none\" stroke=\"#1f4e9a\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x_at(static_cast<double>(i)), y_at(s[i]));
    out << buf;
  }
  out << "\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">", kLeft);
  out << buf << escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">frame</text>\n",
                kLeft + pw / 2 - 15, kH - 10);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n",
                kLeft - 4, kTop + ph + 14);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"11\">%zu</text>\n",
                kLeft + pw - 20, kTop + ph + 14, n ? n - 1 : 0);
  out << buf;
  out << "</svg>\n";
  return out.str();
}

Image overlay_regions(const Image& frame, std::span<const Region> regions) {
  Image out = convert_channels(frame, 3);
  auto paint = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= out.height() || c >= out.width()) return;
    out.at(r, c, 0) = 1.0;
    out.at(r, c, 1) = 0.0;
    out.at(r, c, 2) = 0.0;
  };
  for (const auto& reg : regions) {
    // box edges sit on pixel corners; draw on the inside
    const int x0 = reg.x0, y0 = reg.y0, x1 = reg.x1 - 1, y1 = reg.y1 - 1;
    for (int x = x0; x <= x1; ++x) {
      paint(y0, x);
      paint(y1, x);
    }
    for (int y = y0; y <= y1; ++y) {
      paint(y, x0);
      paint(y, x1);
    }
    for (const auto& p : reg.hull) {
      const int cx = std::clamp(static_cast<int>(std::lround(p.x)), x0, x1);
      const int cy = std::clamp(static_cast<int>(std::lround(p.y)), y0, y1);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) paint(cy + dy, cx + dx);
    }
  }
  return out;
}

}  // namespace sdmae::cli
