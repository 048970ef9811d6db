#pragma once

#include "mmgan/data.hpp"
#include "mmgan/types.hpp"

#include <string>
#include <vector>

namespace mmgan {

/// Standalone SVG scatter of 2-D points, one color per label, with optional mean markers
/// (rows of `means`, may be empty). Points are <circle class="point">, means <path class="mean">.
std::string render_scatter_svg(const Eigen::MatrixXd& points, const Labels& labels,
                               const Eigen::MatrixXd& means, const std::string& title = "");

/// K x K (square only) colored cells (<rect class="cell">) with their values and a color legend.
/// NaN entries render gray and read "n/a".
std::string render_heatmap_svg(const Eigen::MatrixXd& matrix, const std::string& title = "");

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Polyline chart, one <polyline class="series"> per series.
std::string render_line_svg(const std::vector<Series>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label);

}  // namespace mmgan
