#include "senh/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace senh {

namespace {

constexpr double kWidth = 960.0, kHeight = 320.0;
constexpr double kMarginX = 56.0, kMarginY = 28.0;

void append_polyline(std::string& svg, const AudioBuffer& buf, int64_t first,
                     int64_t count, double amp, const char* color) {
  const double plot_w = kWidth - 2 * kMarginX;
  const double plot_h = kHeight - 2 * kMarginY;
  svg += "<polyline fill=\"none\" stroke=\"";
  svg += color;
  svg += "\" stroke-width=\"0.8\" points=\"";
  char pt[64];
  for (int64_t i = 0; i < count; ++i) {
    const double x =
        kMarginX + plot_w * (count > 1 ? double(i) / double(count - 1) : 0.5);
    const double v = buf.samples[first + i] / amp;  // [-1, 1]
    const double y = kMarginY + plot_h * 0.5 * (1.0 - v);
    std::snprintf(pt, sizeof(pt), "%.2f,%.2f ", x, y);
    svg += pt;
  }
  svg += "\"/>\n";
}

}  // namespace

void plot_comparison(const AudioBuffer& truth, const AudioBuffer& prediction,
                     double from_s, double to_s, const std::string& svg_path,
                     const std::string& tsv_path) {
  if (truth.samples.size() != prediction.samples.size() ||
      truth.sample_rate != prediction.sample_rate)
    throw Error(ErrorCategory::data, "plot: signals must share length and rate");
  const int64_t rate = truth.sample_rate;
  const int64_t first = std::llround(from_s * rate);
  const int64_t last = std::llround(to_s * rate);  // exclusive
  const int64_t n = static_cast<int64_t>(truth.samples.size());
  if (!(from_s < to_s) || first < 0 || last > n)
    throw Error(ErrorCategory::data,
                "plot: window [" + std::to_string(from_s) + ", " +
                    std::to_string(to_s) + ") out of bounds for " +
                    std::to_string(static_cast<double>(n) / rate) + " s signal");
  const int64_t count = last - first;

  double amp = 0.0;
  for (int64_t i = first; i < last; ++i) {
    amp = std::max(amp, std::fabs(truth.samples[i]));
    amp = std::max(amp, std::fabs(prediction.samples[i]));
  }
  if (amp == 0.0) amp = 1.0;

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                kWidth, kHeight, kWidth, kHeight);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes: time along x, amplitude along y, midline at 0
  const double x0 = kMarginX, x1 = kWidth - kMarginX;
  const double y0 = kMarginY, y1 = kHeight - kMarginY, ymid = kHeight / 2.0;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\" stroke-width=\"1\"/>\n",
                x0, y1, x1, y1);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\" stroke-width=\"1\"/>\n",
                x0, y0, x0, y1);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n",
                x0, ymid, x1, ymid);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\">time (s): %.3f .. "
                "%.3f</text>\n",
                kWidth / 2.0 - 60.0, kHeight - 6.0, from_s, to_s);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"6\" y=\"%.1f\" font-size=\"12\" transform=\"rotate(-90 "
                "12 %.1f)\">amplitude (+/-%.3g)</text>\n",
                ymid, ymid, amp);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"16\" font-size=\"12\" fill=\"#1f77b4\">ground "
                "truth</text>\n<text x=\"%.1f\" y=\"16\" font-size=\"12\" "
                "fill=\"#d62728\">prediction</text>\n",
                x0, x0 + 110.0);
  svg += buf;
  append_polyline(svg, truth, first, count, amp, "#1f77b4");
  append_polyline(svg, prediction, first, count, amp, "#d62728");
  svg += "</svg>\n";

  std::ofstream sf(svg_path);
  if (!sf) throw Error(ErrorCategory::io, "cannot create " + svg_path);
  sf << svg;

  std::ofstream tf(tsv_path);
  if (!tf) throw Error(ErrorCategory::io, "cannot create " + tsv_path);
  tf << "time-s\ttruth\tprediction\n";
  char line[96];
  for (int64_t i = 0; i < count; ++i) {
    std::snprintf(line, sizeof(line), "%.6f\t%.8f\t%.8f\n",
                  static_cast<double>(first + i) / rate, truth.samples[first + i],
                  prediction.samples[first + i]);
    tf << line;
  }
}

}  // namespace senh
