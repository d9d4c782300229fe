#include "cbstrat/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cbstrat {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 440;
constexpr int kLeft = 70;
constexpr int kRight = 20;
constexpr int kTop = 40;
constexpr int kBottom = 60;
constexpr int kPlotW = kWidth - kLeft - kRight;
constexpr int kPlotH = kHeight - kTop - kBottom;

const char* kPalette[] = {"#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4",
                          "#8c613c", "#dc7ec0", "#797979", "#d5bb67", "#82c6e2"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string& title) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\">\n",
                kWidth, kHeight, kWidth, kHeight);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">%s</text>\n",
                kWidth / 2, escape(title).c_str());
  out += buf;
  return out;
}

// Round the raw range to pleasant tick spacing.
double nice_step(double span) {
  if (span <= 0.0) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step = 10.0;
  if (frac <= 1.0) {
    step = 1.0;
  } else if (frac <= 2.0) {
    step = 2.0;
  } else if (frac <= 5.0) {
    step = 5.0;
  }
  return step * mag;
}

void append_y_axis(std::string& out, double y_min, double y_max) {
  char buf[256];
  const double step = nice_step(y_max - y_min);
  const double first = std::ceil(y_min / step) * step;
  for (double v = first; v <= y_max + 1e-12; v += step) {
    const double frac = (v - y_min) / (y_max - y_min);
    const double y = kTop + kPlotH - frac * kPlotH;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n",
                  kLeft, y, kLeft + kPlotW, y);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%s</text>\n",
                  kLeft - 6, y + 4, fmt(v).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", kLeft, kTop,
                kLeft, kTop + kPlotH);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", kLeft,
                kTop + kPlotH, kLeft + kPlotW, kTop + kPlotH);
  out += buf;
}

void append_legend(std::string& out, const std::vector<std::string>& names) {
  if (names.size() <= 1) return;
  char buf[256];
  int x = kLeft;
  const int y = kHeight - 14;
  for (std::size_t s = 0; s < names.size() && s < kPaletteSize; ++s) {
    std::snprintf(buf, sizeof(buf), "<rect x=\"%d\" y=\"%d\" width=\"10\" height=\"10\" fill=\"%s\"/>\n",
                  x, y - 9, kPalette[s]);
    out += buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\" font-size=\"11\">%s</text>\n", x + 14,
                  y, escape(names[s]).c_str());
    out += buf;
    x += 18 + 7 * static_cast<int>(names[s].size());
  }
}

}  // namespace

std::string render_bar_chart(const std::string& title, const std::vector<std::string>& categories,
                             const std::vector<BarSeries>& series, bool stacked) {
  std::string out = header(title);
  char buf[320];

  double y_min = 0.0, y_max = 0.0;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    double pos = 0.0, neg = 0.0;
    for (const auto& s : series) {
      const double v = c < s.values.size() ? s.values[c] : 0.0;
      if (stacked) {
        (v >= 0.0 ? pos : neg) += v;
      } else {
        y_max = std::max(y_max, v);
        y_min = std::min(y_min, v);
      }
    }
    if (stacked) {
      y_max = std::max(y_max, pos);
      y_min = std::min(y_min, neg);
    }
  }
  if (y_max == y_min) y_max = y_min + 1.0;
  y_max += 0.05 * (y_max - y_min);
  if (y_min < 0.0) y_min -= 0.05 * (y_max - y_min);

  append_y_axis(out, y_min, y_max);
  const auto y_of = [&](double v) {
    return kTop + kPlotH - (v - y_min) / (y_max - y_min) * kPlotH;
  };

  const std::size_t n = categories.size();
  const double slot = n > 0 ? static_cast<double>(kPlotW) / static_cast<double>(n) : kPlotW;
  const double band = slot * 0.8;
  for (std::size_t c = 0; c < n; ++c) {
    const double x0 = kLeft + slot * static_cast<double>(c) + slot * 0.1;
    if (stacked) {
      double pos = 0.0, neg = 0.0;
      for (std::size_t s = 0; s < series.size(); ++s) {
        const double v = c < series[s].values.size() ? series[s].values[c] : 0.0;
        if (v == 0.0) continue;
        double lo = v >= 0.0 ? pos : neg + v;
        double hi = v >= 0.0 ? pos + v : neg;
        (v >= 0.0 ? pos : neg) += v;
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>\n",
                      x0, y_of(hi), band, std::max(0.5, y_of(lo) - y_of(hi)),
                      kPalette[s % kPaletteSize]);
        out += buf;
      }
    } else {
      const double w = band / static_cast<double>(series.size());
      for (std::size_t s = 0; s < series.size(); ++s) {
        const double v = c < series[s].values.size() ? series[s].values[c] : 0.0;
        const double top = y_of(std::max(v, 0.0));
        const double bot = y_of(std::min(v, 0.0));
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>\n",
                      x0 + w * static_cast<double>(s), top, std::max(w - 1.0, 1.0),
                      std::max(0.5, bot - top), kPalette[s % kPaletteSize]);
        out += buf;
      }
    }
    // Category labels, thinned when crowded.
    const std::size_t label_every = n > 24 ? (n + 23) / 24 : 1;
    if (c % label_every == 0) {
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%.1f\" y=\"%d\" font-size=\"10\" text-anchor=\"middle\">%s</text>\n",
                    x0 + band / 2.0, kTop + kPlotH + 16, escape(categories[c]).c_str());
      out += buf;
    }
  }

  std::vector<std::string> names;
  for (const auto& s : series) names.push_back(s.name);
  append_legend(out, names);
  out += "</svg>\n";
  return out;
}

std::string render_scatter(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ScatterGroup>& groups) {
  std::string out = header(title);
  char buf[320];

  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const auto& g : groups) {
    for (const auto& [x, y] : g.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  const double x_pad = 0.04 * (x_max - x_min);
  const double y_pad = 0.06 * (y_max - y_min);
  x_min -= x_pad;
  x_max += x_pad;
  y_min -= y_pad;
  y_max += y_pad;

  append_y_axis(out, y_min, y_max);
  const auto x_of = [&](double v) {
    return kLeft + (v - x_min) / (x_max - x_min) * kPlotW;
  };
  const auto y_of = [&](double v) {
    return kTop + kPlotH - (v - y_min) / (y_max - y_min) * kPlotH;
  };

  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& [x, y] : groups[g].points) {
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.5\" fill=\"%s\" fill-opacity=\"0.7\"/>\n",
                    x_of(x), y_of(y), kPalette[g % kPaletteSize]);
      out += buf;
    }
  }

  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
                kLeft + kPlotW / 2, kTop + kPlotH + 34, escape(x_label).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"16\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 16 %d)\">%s</text>\n",
                kTop + kPlotH / 2, kTop + kPlotH / 2, escape(y_label).c_str());
  out += buf;

  std::vector<std::string> names;
  for (const auto& g : groups) names.push_back(g.name);
  if (names.size() <= 10) append_legend(out, names);
  out += "</svg>\n";
  return out;
}

}  // namespace cbstrat
