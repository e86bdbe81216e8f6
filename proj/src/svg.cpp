#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "kiae/error.hpp"
#include "kiae/experiment.hpp"

namespace kiae {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 40.0;
constexpr double kMarker = 5.0;

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                  "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Shape by true label: circle, square, triangle, diamond, then cross variants.
void marker(std::ostream& out, int shape, double x, double y, const char* fill) {
  const double r = kMarker;
  out << "  ";
  switch (shape % 5) {
    case 0:
      out << "<circle class=\"point\" cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\""
          << num(r) << "\"";
      break;
    case 1:
      out << "<rect class=\"point\" x=\"" << num(x - r) << "\" y=\"" << num(y - r)
          << "\" width=\"" << num(2 * r) << "\" height=\"" << num(2 * r) << "\"";
      break;
    case 2:
      out << "<polygon class=\"point\" points=\"" << num(x) << "," << num(y - r) << " "
          << num(x + r) << "," << num(y + r) << " " << num(x - r) << "," << num(y + r) << "\"";
      break;
    case 3:
      out << "<polygon class=\"point\" points=\"" << num(x) << "," << num(y - r) << " "
          << num(x + r) << "," << num(y) << " " << num(x) << "," << num(y + r) << " "
          << num(x - r) << "," << num(y) << "\"";
      break;
    default:
      out << "<path class=\"point\" d=\"M" << num(x - r) << " " << num(y - r) << "L" << num(x + r)
          << " " << num(y + r) << "M" << num(x - r) << " " << num(y + r) << "L" << num(x + r)
          << " " << num(y - r) << "\" stroke=\"" << fill << "\" stroke-width=\"2\"";
      break;
  }
  out << " fill=\"" << fill << "\" fill-opacity=\"0.75\"/>\n";
}

}  // namespace

void emit_scatter(const Matrix& projected, std::span<const int> predicted,
                  std::span<const int> labels, const Matrix& centroids,
                  const Matrix& centroid_distances, const std::string& path) {
  const std::size_t n = projected.rows();
  if (n == 0) throw DomainError("emit_scatter: nothing to plot");
  if (projected.cols() != 2) throw ShapeError("emit_scatter: projected points must have 2 columns");
  if (predicted.size() != n || labels.size() != n)
    throw ShapeError("emit_scatter: one cluster and one label per point required");
  const std::size_t k = centroids.rows();
  if ((k > 0 && centroids.cols() != 2) || centroid_distances.rows() != k ||
      centroid_distances.cols() != k) {
    throw ShapeError("emit_scatter: centroids must be K x 2 with a K x K distance table");
  }

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  auto extend = [&](double x, double y) {
    lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
  };
  for (std::size_t i = 0; i < n; ++i) extend(projected(i, 0), projected(i, 1));
  for (std::size_t c = 0; c < k; ++c) extend(centroids(c, 0), centroids(c, 1));
  double span_x = hi_x - lo_x, span_y = hi_y - lo_y;
  if (!(span_x > 0.0)) span_x = 1.0, lo_x -= 0.5;
  if (!(span_y > 0.0)) span_y = 1.0, lo_y -= 0.5;
  auto sx = [&](double x) { return kMargin + (x - lo_x) / span_x * (kWidth - 2 * kMargin); };
  auto sy = [&](double y) { return kHeight - kMargin - (y - lo_y) / span_y * (kHeight - 2 * kMargin); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 8)
      << "\" text-anchor=\"middle\" font-size=\"12\">PC1</text>\n";
  out << "  <text x=\"12\" y=\"" << num(kHeight / 2) << "\" font-size=\"12\" transform=\"rotate(-90 12 "
      << num(kHeight / 2) << ")\" text-anchor=\"middle\">PC2</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const char* fill = kPalette[static_cast<std::size_t>(std::max(predicted[i], 0)) % kPalette.size()];
    marker(out, std::max(labels[i], 0), sx(projected(i, 0)), sy(projected(i, 1)), fill);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      double x1 = sx(centroids(a, 0)), y1 = sy(centroids(a, 1));
      double x2 = sx(centroids(b, 0)), y2 = sy(centroids(b, 1));
      out << "  <line class=\"link\" x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
          << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
      char label[32];
      std::snprintf(label, sizeof label, "%.3g", centroid_distances(a, b));
      out << "  <text class=\"distance\" x=\"" << num((x1 + x2) / 2) << "\" y=\""
          << num((y1 + y2) / 2 - 4) << "\" font-size=\"11\" text-anchor=\"middle\">" << label
          << "</text>\n";
    }
  for (std::size_t c = 0; c < k; ++c) {
    double x = sx(centroids(c, 0)), y = sy(centroids(c, 1));
    out << "  <path class=\"centroid\" d=\"M" << num(x - 9) << " " << num(y) << "L" << num(x + 9)
        << " " << num(y) << "M" << num(x) << " " << num(y - 9) << "L" << num(x) << " "
        << num(y + 9) << "\" stroke=\"" << kPalette[c % kPalette.size()]
        << "\" stroke-width=\"3\"/>\n";
  }
  out << "</svg>\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write '" + path + "'");
  file << out.str();
  if (!file) throw IoError("failed writing '" + path + "'");
}

}  // namespace kiae
