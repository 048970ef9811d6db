#include "mmgan/svg.hpp"

#include "mmgan/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mmgan {

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
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

std::string fmt(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string header(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) +
         " " + std::to_string(h) + "\">\n<rect x=\"0\" y=\"0\" width=\"" + std::to_string(w) +
         "\" height=\"" + std::to_string(h) + "\" fill=\"white\"/>\n";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

// white -> blue ramp
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto channel = [t](int from, int to) { return static_cast<int>(std::lround(from + t * (to - from))); };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(247, 8), channel(251, 48), channel(255, 107));
  return buf;
}

}  // namespace

std::string render_scatter_svg(const Eigen::MatrixXd& points, const Labels& labels, const Eigen::MatrixXd& means,
                               const std::string& title) {
  if (points.cols() != 2) throw InvalidArgument("render_scatter_svg: points must have 2 columns");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != points.rows())
    throw InvalidArgument("render_scatter_svg: one label per point required");
  if (means.size() > 0 && means.cols() != 2) throw InvalidArgument("render_scatter_svg: means must have 2 columns");
  constexpr int W = 480, H = 480, M = 40;
  Range rx, ry;
  for (Eigen::Index i = 0; i < points.rows(); ++i) rx.add(points(i, 0)), ry.add(points(i, 1));
  for (Eigen::Index i = 0; i < means.rows(); ++i) rx.add(means(i, 0)), ry.add(means(i, 1));
  rx.finish();
  ry.finish();

  std::ostringstream out;
  out << header(W, H);
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (!std::isfinite(points(i, 0)) || !std::isfinite(points(i, 1))) continue;
    const auto label = labels.empty() ? 0 : labels[static_cast<std::size_t>(i)];
    out << "<circle class=\"point\" cx=\"" << fmt(rx.map(points(i, 0), M, W - M)) << "\" cy=\""
        << fmt(ry.map(points(i, 1), H - M, M)) << "\" r=\"2\" fill=\""
        << kPalette[static_cast<std::size_t>(label) % kPalette.size()] << "\" fill-opacity=\"0.7\"/>\n";
  }
  for (Eigen::Index k = 0; k < means.rows(); ++k) {
    const double x = rx.map(means(k, 0), M, W - M), y = ry.map(means(k, 1), H - M, M);
    out << "<path class=\"mean\" d=\"M " << fmt(x - 6) << ' ' << fmt(y - 6) << " L " << fmt(x + 6) << ' '
        << fmt(y + 6) << " M " << fmt(x - 6) << ' ' << fmt(y + 6) << " L " << fmt(x + 6) << ' ' << fmt(y - 6)
        << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_heatmap_svg(const Eigen::MatrixXd& matrix, const std::string& title) {
  if (matrix.rows() == 0 || matrix.cols() == 0) throw InvalidArgument("render_heatmap_svg: empty matrix");
  if (matrix.rows() != matrix.cols()) throw InvalidArgument("render_heatmap_svg: matrix must be square");
  constexpr int cell = 48, M = 40, legend = 80;
  const int W = M * 2 + cell * static_cast<int>(matrix.cols()) + legend;
  const int H = M * 2 + cell * static_cast<int>(matrix.rows());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < matrix.size(); ++i)
    if (std::isfinite(matrix.data()[i])) lo = std::min(lo, matrix.data()[i]), hi = std::max(hi, matrix.data()[i]);
  if (!(lo <= hi)) lo = 0, hi = 1;
  const double span = hi - lo > 1e-12 ? hi - lo : 1.0;

  std::ostringstream out;
  out << header(W, H);
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double v = matrix(i, j);
      const bool ok = std::isfinite(v);
      const double t = ok ? (v - lo) / span : 0;
      const int x = M + cell * static_cast<int>(j), y = M + cell * static_cast<int>(i);
      out << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << (ok ? ramp(t) : std::string("#bbbbbb")) << "\" stroke=\"white\"/>\n";
      out << "<text class=\"value\" x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"" << (ok && t > 0.6 ? "white" : "black") << "\">"
          << (ok ? fmt(v) : std::string("n/a")) << "</text>\n";
    }
  // legend
  const int lx = W - legend + 10, ly = M, lh = cell * static_cast<int>(matrix.rows());
  constexpr int steps = 10;
  for (int s = 0; s < steps; ++s) {
    const double t = 1.0 - (s + 0.5) / steps;
    out << "<rect class=\"legend\" x=\"" << lx << "\" y=\"" << fmt(ly + lh * s / double(steps))
        << "\" width=\"16\" height=\"" << fmt(lh / double(steps) + 0.5) << "\" fill=\"" << ramp(t) << "\"/>\n";
  }
  out << "<text x=\"" << lx + 20 << "\" y=\"" << ly + 10 << "\" font-size=\"10\">" << fmt(hi) << "</text>\n";
  out << "<text x=\"" << lx + 20 << "\" y=\"" << ly + lh << "\" font-size=\"10\">" << fmt(lo) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string render_line_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                            const std::string& y_label) {
  constexpr int W = 640, H = 400, M = 50;
  Range rx, ry;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw InvalidArgument("render_line_svg: series '" + s.name + "' x/y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) rx.add(s.x[i]), ry.add(s.y[i]);
  }
  rx.finish();
  ry.finish();

  std::ostringstream out;
  out << header(W, H);
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << H / 2 << ")\">" << escape(y_label) << "</text>\n";
  out << "<text x=\"" << M - 4 << "\" y=\"" << H - M << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ry.lo, 3)
      << "</text>\n";
  out << "<text x=\"" << M - 4 << "\" y=\"" << M + 8 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ry.hi, 3)
      << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << (first ? "" : " ") << fmt(rx.map(s.x[i], M, W - M)) << ',' << fmt(ry.map(s.y[i], H - M, M));
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - M - 4 << "\" y=\"" << M + 14 + 14 * static_cast<int>(k)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace mmgan
