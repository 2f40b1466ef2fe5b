#pragma once

#include <string>
#include <vector>

namespace dmpcrl {

/// Minimal static line-plot writer (SVG). Deterministic output: same data,
/// same bytes. Intended for the offline figures the commands emit next to
/// their CSVs.
class SvgLinePlot {
 public:
  SvgLinePlot(std::string title, std::string xlabel, std::string ylabel);

  void set_log_y(bool enabled) { log_y_ = enabled; }
  void add_series(std::string name, std::vector<double> x,
                  std::vector<double> y);

  /// Renders to `path`; throws Error on I/O failure or when no finite
  /// points were added.
  void write(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> x, y;
  };
  std::string title_, xlabel_, ylabel_;
  bool log_y_ = false;
  std::vector<Series> series_;
};

}  // namespace dmpcrl
