#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tvvar {

// Minimal deterministic SVG line plots: fixed layout, fixed palette, all
// numbers printed with %.6g so identical input produces identical bytes.
class SvgFigure {
 public:
  SvgFigure(std::string title, std::string xlabel, std::string ylabel);

  void set_log_x(bool on) { log_x_ = on; }

  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& label);
  void add_points(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& label);
  void add_ribbon(const std::vector<double>& x, const std::vector<double>& lower,
                  const std::vector<double>& upper, const std::string& label);

  void write(std::ostream& out) const;
  void save(const std::string& path) const;

 private:
  enum class SeriesKind { Line, Points, Ribbon };

  struct Series {
    SeriesKind kind;
    std::vector<double> x;
    std::vector<double> y;   // line/points, and ribbon lower
    std::vector<double> y2;  // ribbon upper
    std::string label;
    int color_index;
  };

  std::string title_, xlabel_, ylabel_;
  bool log_x_ = false;
  std::vector<Series> series_;
  int next_color_ = 0;
};

}  // namespace tvvar
