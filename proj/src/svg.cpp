#include "tvvar/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "tvvar/common.hpp"

namespace tvvar {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 34.0;
constexpr double kMarginBottom = 50.0;

const char* kPalette[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad",
                          "#e67e22", "#16a085", "#2c3e50", "#d35400"};
constexpr int kPaletteSize = 8;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
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

SvgFigure::SvgFigure(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

void SvgFigure::add_line(const std::vector<double>& x, const std::vector<double>& y,
                         const std::string& label) {
  if (x.size() != y.size()) throw ConfigError("svg: x and y lengths differ");
  series_.push_back({SeriesKind::Line, x, y, {}, label, next_color_++});
}

void SvgFigure::add_points(const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& label) {
  if (x.size() != y.size()) throw ConfigError("svg: x and y lengths differ");
  series_.push_back({SeriesKind::Points, x, y, {}, label, next_color_++});
}

void SvgFigure::add_ribbon(const std::vector<double>& x, const std::vector<double>& lower,
                           const std::vector<double>& upper, const std::string& label) {
  if (x.size() != lower.size() || x.size() != upper.size())
    throw ConfigError("svg: ribbon lengths differ");
  series_.push_back({SeriesKind::Ribbon, x, lower, upper, label, next_color_++});
}

void SvgFigure::write(std::ostream& out) const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto tx = [&](double v) { return log_x_ ? std::log10(v) : v; };
  for (const auto& s : series_) {
    for (double v : s.x) {
      if (log_x_ && v <= 0.0) throw ConfigError("svg: log-scale x requires positive values");
      xmin = std::min(xmin, tx(v));
      xmax = std::max(xmax, tx(v));
    }
    for (double v : s.y) {
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
    for (double v : s.y2) {
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw DataError("svg: nothing to plot");
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double xpad = 0.04 * (xmax - xmin);
  const double ypad = 0.06 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double v) { return kMarginLeft + (tx(v) - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double v) { return kMarginTop + (ymax - v) / (ymax - ymin) * plot_h; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
      << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(kHeight) << "\">\n";
  out << "<rect width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
      << "\" fill=\"white\"/>\n";

  // frame
  out << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(kMarginTop) << "\" width=\""
      << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  // ticks: five equispaced per axis
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const double gx = kMarginLeft + plot_w * i / 4.0;
    const double gy = kMarginTop + plot_h - plot_h * i / 4.0;
    const double xval = log_x_ ? std::pow(10.0, fx) : fx;
    out << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(kMarginTop + plot_h) << "\" x2=\""
        << fmt(gx) << "\" y2=\"" << fmt(kMarginTop + plot_h + 5) << "\" stroke=\"#444444\"/>\n";
    out << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(kMarginTop + plot_h + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << fmt(xval) << "</text>\n";
    out << "<line x1=\"" << fmt(kMarginLeft - 5) << "\" y1=\"" << fmt(gy) << "\" x2=\""
        << fmt(kMarginLeft) << "\" y2=\"" << fmt(gy) << "\" stroke=\"#444444\"/>\n";
    out << "<text x=\"" << fmt(kMarginLeft - 8) << "\" y=\"" << fmt(gy + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(fy)
        << "</text>\n";
  }

  // series, ribbons first so lines draw on top
  for (const auto& s : series_) {
    if (s.kind != SeriesKind::Ribbon) continue;
    const char* color = kPalette[s.color_index % kPaletteSize];
    out << "<path d=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << (i == 0 ? 'M' : 'L') << fmt(px(s.x[i])) << ' ' << fmt(py(s.y2[i]));
    for (std::size_t i = s.x.size(); i-- > 0;)
      out << 'L' << fmt(px(s.x[i])) << ' ' << fmt(py(s.y[i]));
    out << "Z\" fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
  }
  for (const auto& s : series_) {
    const char* color = kPalette[s.color_index % kPaletteSize];
    if (s.kind == SeriesKind::Line) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) out << ' ';
        out << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
      }
      out << "\"/>\n";
    } else if (s.kind == SeriesKind::Points) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i]))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
  }

  // legend, top-left inside the frame
  double ly = kMarginTop + 14.0;
  for (const auto& s : series_) {
    if (s.label.empty()) continue;
    const char* color = kPalette[s.color_index % kPaletteSize];
    out << "<line x1=\"" << fmt(kMarginLeft + 8) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(kMarginLeft + 26) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(kMarginLeft + 30) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.label)
        << "</text>\n";
    ly += 14.0;
  }

  out << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"" << fmt(kMarginTop - 12)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      << escape_xml(title_) << "</text>\n";
  std::string xl = xlabel_;
  if (log_x_) xl += " (log scale)";
  out << "<text x=\"" << fmt(kMarginLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 12)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
      << escape_xml(xl) << "</text>\n";
  out << "<text x=\"16\" y=\"" << fmt(kMarginTop + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt(kMarginTop + plot_h / 2) << ")\">" << escape_xml(ylabel_) << "</text>\n";
  out << "</svg>\n";
}

void SvgFigure::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  write(out);
  if (!out) throw DataError("failed while writing " + path);
}

}  // namespace tvvar
