#pragma once

// Minimal static line plots. Output depends only on the data, so two runs
// with identical series produce identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace rayq::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string xLabel;
  std::string yLabel;
  bool logY = true;
};

namespace detail {

inline std::string escape(const std::string& s) {
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

inline std::string num(double x, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

inline std::string tick(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#9467bd", "#ff7f0e", "#2ca02c", "#d62728", "#8c564b", "#17becf"};
  return palette[i % 7];
}

}  // namespace detail

inline void write_plot(std::ostream& os, const PlotSpec& spec, const std::vector<Series>& series) {
  using detail::num;
  constexpr double W = 720, H = 440, L = 80, R = 180, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;

  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.logY || y > 0.0); };
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double y = spec.logY ? std::log10(s.y[i]) : s.y[i];
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  const bool empty = !(xmin <= xmax);
  if (empty) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (spec.logY) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 1;
    ymax += 1;
  }
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return T + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(L + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int yticks = spec.logY ? static_cast<int>(ymax - ymin) : 5;
  const int ystep = spec.logY ? std::max(1, yticks / 8) : 1;
  for (int i = 0; i <= yticks; i += ystep) {
    const double y = ymin + (ymax - ymin) * i / std::max(1, yticks);
    const std::string label = spec.logY ? "1e" + std::to_string(static_cast<int>(std::lround(y))) : detail::tick(y);
    os << "<line x1=\"" << L << "\" x2=\"" << num(L + pw) << "\" y1=\"" << num(py(y)) << "\" y2=\"" << num(py(y))
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = xmin + (xmax - xmin) * i / 5.0;
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(T + ph + 18) << "\" text-anchor=\"middle\">"
       << detail::tick(x) << "</text>\n";
  }
  os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">"
     << detail::escape(spec.xLabel) << "</text>\n";
  os << "<text transform=\"translate(20," << num(T + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape(spec.yLabel) << (spec.logY ? " (log)" : "") << "</text>\n";
  if (empty)
    os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\">no data</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double y = spec.logY ? std::log10(s.y[i]) : s.y[i];
      pts += num(px(s.x[i])) + "," + num(py(y)) + " ";
    }
    if (!pts.empty()) {
      pts.pop_back();
      os << "<polyline fill=\"none\" stroke=\"" << detail::color(si) << "\" stroke-width=\"1.5\""
         << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts << "\"/>\n";
    }
    const double ly = T + 14 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << num(L + pw + 12) << "\" x2=\"" << num(L + pw + 36) << "\" y1=\"" << num(ly) << "\" y2=\""
       << num(ly) << "\" stroke=\"" << detail::color(si) << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << num(L + pw + 42) << "\" y=\"" << num(ly + 4) << "\">" << detail::escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace rayq::svg
