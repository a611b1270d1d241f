// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <string>

#include "lingogap/evalkit.hpp"
#include "lingogap/record.hpp"

namespace lingogap {

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 320.0;
constexpr double kMargin = 48.0;

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string safe_name(const std::string &lang) {
  std::string out;
  for (char c : lang) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

std::string svg_open(const std::string &title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                  num(kWidth) + "\" height=\"" + num(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"14\">" + escape(title) + "</text>\n";
  // axes
  s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kHeight - kMargin) +
       "\" x2=\"" + num(kWidth - kMargin / 2) + "\" y2=\"" + num(kHeight - kMargin) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin / 2 + 10) +
       "\" x2=\"" + num(kMargin) + "\" y2=\"" + num(kHeight - kMargin) +
       "\" stroke=\"black\"/>\n";
  return s;
}

std::string label(double x, double y, const std::string &text,
                  const char *anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" +
         anchor + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         escape(text) + "</text>\n";
}

std::string histogram_svg(const LanguageMISummary &l,
                          const std::vector<double> &edges) {
  const std::size_t bins = l.hist_correct.size();
  std::size_t peak = 1;
  for (std::size_t b = 0; b < bins; ++b)
    peak = std::max({peak, l.hist_correct[b], l.hist_incorrect[b]});
  const double plot_w = kWidth - 1.5 * kMargin;
  const double plot_h = kHeight - 1.5 * kMargin - 10;
  const double bw = plot_w / static_cast<double>(bins);
  const double y0 = kHeight - kMargin;

  std::string s = svg_open("conditional entropy per token: " + l.lang);
  const auto bar = [&](std::size_t b, std::size_t count, double shift,
                       const char *color) {
    if (count == 0) return;
    const double h = plot_h * static_cast<double>(count) / static_cast<double>(peak);
    s += "<rect x=\"" + num(kMargin + b * bw + shift) + "\" y=\"" + num(y0 - h) +
         "\" width=\"" + num(bw / 2) + "\" height=\"" + num(h) + "\" fill=\"" +
         color + "\"/>\n";
  };
  for (std::size_t b = 0; b < bins; ++b) {
    bar(b, l.hist_correct[b], 0.0, "#3b7dd8");
    bar(b, l.hist_incorrect[b], bw / 2, "#d8563b");
  }
  s += label(kMargin, y0 + 14, num(edges.front()));
  s += label(kMargin + plot_w, y0 + 14, num(edges.back()));
  s += label(kMargin + plot_w / 2, y0 + 30, "nats per token");
  s += label(kMargin - 4, y0 - plot_h, std::to_string(peak), "end");
  s += label(kWidth - kMargin, 40, "correct (" + std::to_string(l.correct.n) + ")", "end");
  s += label(kWidth - kMargin, 54, "incorrect (" + std::to_string(l.incorrect.n) + ")", "end");
  s += "<rect x=\"" + num(kWidth - kMargin + 4) + "\" y=\"32\" width=\"10\" "
       "height=\"10\" fill=\"#3b7dd8\"/>\n";
  s += "<rect x=\"" + num(kWidth - kMargin + 4) + "\" y=\"46\" width=\"10\" "
       "height=\"10\" fill=\"#d8563b\"/>\n";
  s += "</svg>\n";
  return s;
}

std::string scatter_svg(const MISummary &m) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto &l : m.languages) {
    lo = first ? l.mean_mi : std::min(lo, l.mean_mi);
    hi = first ? l.mean_mi : std::max(hi, l.mean_mi);
    first = false;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double plot_w = kWidth - 1.5 * kMargin;
  const double plot_h = kHeight - 1.5 * kMargin - 10;
  const double y0 = kHeight - kMargin;

  std::string title = "mean MI vs accuracy";
  if (m.correlation) title += " (r = " + num(*m.correlation) + ")";
  std::string s = svg_open(title);
  for (const auto &l : m.languages) {
    const double x = kMargin + plot_w * (l.mean_mi - lo) / (hi - lo);
    const double y = y0 - plot_h * l.accuracy;
    s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) +
         "\" r=\"4\" fill=\"#3b7dd8\"/>\n";
    s += label(x + 6, y - 6, l.lang, "start");
  }
  s += label(kMargin, y0 + 14, num(lo));
  s += label(kMargin + plot_w, y0 + 14, num(hi));
  s += label(kMargin + plot_w / 2, y0 + 30, "mean MI (nats per token)");
  s += label(kMargin - 4, y0, "0", "end");
  s += label(kMargin - 4, y0 - plot_h, "1", "end");
  s += "</svg>\n";
  return s;
}

}  // namespace

EmittedPlots emit_plots(const MISummary &summary,
                        const std::filesystem::path &dir) {
  EmittedPlots out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  for (const auto &l : summary.languages) {
    if (l.n == 0) {
      out.warnings.push_back("language " + l.lang + " is empty; no histogram");
      continue;
    }
    const std::string stem = "hist_" + safe_name(l.lang);
    std::string tsv = "bin_lo\tbin_hi\tcorrect\tincorrect\n";
    for (std::size_t b = 0; b < l.hist_correct.size(); ++b)
      tsv += num(summary.bin_edges[b]) + "\t" + num(summary.bin_edges[b + 1]) +
             "\t" + std::to_string(l.hist_correct[b]) + "\t" +
             std::to_string(l.hist_incorrect[b]) + "\n";
    write_text_file(dir / (stem + ".tsv"), tsv);
    write_text_file(dir / (stem + ".svg"), histogram_svg(l, summary.bin_edges));
    out.data.push_back(dir / (stem + ".tsv"));
    out.plots.push_back(dir / (stem + ".svg"));
  }

  std::string tsv = "lang\tmean_mi_per_token\taccuracy\tn\n";
  for (const auto &l : summary.languages)
    tsv += l.lang + "\t" + num(l.mean_mi) + "\t" + num(l.accuracy) + "\t" +
           std::to_string(l.n) + "\n";
  write_text_file(dir / "mi_vs_accuracy.tsv", tsv);
  write_text_file(dir / "mi_vs_accuracy.svg", scatter_svg(summary));
  out.data.push_back(dir / "mi_vs_accuracy.tsv");
  out.plots.push_back(dir / "mi_vs_accuracy.svg");
  if (!summary.correlation)
    out.warnings.push_back("correlation undefined; scatter drawn without r");
  return out;
}

}  // namespace lingogap
