#pragma once

#include <string>
#include <vector>

namespace tslt {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  bool svg = false;
};

/// Reads mass.csv, acceptance.csv and speedup.csv from `csv_dir` (each
/// optional, at least one required) and writes one whitespace-separated
/// series file per curve into `out_dir`, plus SVG line charts on request.
/// Returns the written file names in order. Throws std::runtime_error on
/// missing columns.
std::vector<std::string> emit_plot_data(const std::string& csv_dir, const std::string& out_dir,
                                        const PlotOptions& options = {});

/// Self-contained SVG line chart.
std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       bool log_x);

}  // namespace tslt
