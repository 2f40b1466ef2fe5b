#include "svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "errors.hpp"

namespace dmpcrl {

namespace {

constexpr double kWidth = 720.0, kHeight = 440.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 55.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

SvgLinePlot::SvgLinePlot(std::string title, std::string xlabel,
                         std::string ylabel)
    : title_(std::move(title)),
      xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)) {}

void SvgLinePlot::add_series(std::string name, std::vector<double> x,
                             std::vector<double> y) {
  if (x.size() != y.size())
    throw DimensionError("svgplot: series x/y length mismatch");
  series_.push_back({std::move(name), std::move(x), std::move(y)});
}

void SvgLinePlot::write(const std::string& path) const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto usable = [&](double xv, double yv) {
    return std::isfinite(xv) && std::isfinite(yv) && (!log_y_ || yv > 0.0);
  };
  for (const auto& s : series_)
    for (size_t k = 0; k < s.x.size(); ++k)
      if (usable(s.x[k], s.y[k])) {
        xmin = std::min(xmin, s.x[k]);
        xmax = std::max(xmax, s.x[k]);
        ymin = std::min(ymin, s.y[k]);
        ymax = std::max(ymax, s.y[k]);
      }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw Error("svgplot: no plottable points");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (log_y_) {
    ymin = std::log10(ymin);
    ymax = std::log10(ymax);
  }
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) {
    const double t = log_y_ ? std::log10(v) : v;
    return kTop + ph - (t - ymin) / (ymax - ymin) * ph;
  };

  std::ofstream out(path);
  if (!out) throw Error("svgplot: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"16\">" << title_ << "</text>\n";

  const int ticks = 5;
  for (int k = 0; k <= ticks; ++k) {
    const double fx = xmin + (xmax - xmin) * k / ticks;
    const double gx = px(fx);
    out << "<line x1=\"" << gx << "\" y1=\"" << kTop << "\" x2=\"" << gx
        << "\" y2=\"" << kTop + ph << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << gx << "\" y=\"" << kTop + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx)
        << "</text>\n";
    const double fy = ymin + (ymax - ymin) * k / ticks;
    const double gy = kTop + ph - (fy - ymin) / (ymax - ymin) * ph;
    out << "<line x1=\"" << kLeft << "\" y1=\"" << gy << "\" x2=\""
        << kLeft + pw << "\" y2=\"" << gy << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-size=\"11\">"
        << fmt(log_y_ ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel_
      << "</text>\n"
      << "<text x=\"18\" y=\"" << kTop + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
         "18 "
      << kTop + ph / 2 << ")\">" << ylabel_ << "</text>\n";

  for (size_t si = 0; si < series_.size(); ++si) {
    const auto& s = series_[si];
    const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    bool any = false;
    for (size_t k = 0; k < s.x.size(); ++k) {
      if (!usable(s.x[k], s.y[k])) continue;
      out << fmt(px(s.x[k])) << "," << fmt(py(s.y[k])) << " ";
      any = true;
    }
    out << "\"/>\n";
    if (any && !s.name.empty()) {
      const double ly = kTop + 16.0 + 16.0 * static_cast<double>(si);
      out << "<line x1=\"" << kLeft + pw - 120 << "\" y1=\"" << ly
          << "\" x2=\"" << kLeft + pw - 96 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << kLeft + pw - 90 << "\" y=\"" << ly + 4
          << "\" font-size=\"11\">" << s.name << "</text>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw Error("svgplot: write failed for " + path);
}

}  // namespace dmpcrl
