// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "commands.hpp"
#include "compdiff/errors.hpp"

namespace compdiff::cli {
namespace {

constexpr int kCanvas = 480;
constexpr int kMargin = 40;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string points_svg(const Matrix& samples) {
  if (samples.rows() == 0 || samples.cols() != 2) throw ValidationError("points plot needs a nonempty 2-column sample");
  double lo = std::min(samples.col(0).minCoeff(), samples.col(1).minCoeff());
  double hi = std::max(samples.col(0).maxCoeff(), samples.col(1).maxCoeff());
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double span = kCanvas - 2 * kMargin;
  auto sx = [&](double v) { return kMargin + (v - lo) / (hi - lo) * span; };
  auto sy = [&](double v) { return kCanvas - kMargin - (v - lo) / (hi - lo) * span; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas << "\" height=\"" << kCanvas
     << "\" viewBox=\"0 0 " << kCanvas << ' ' << kCanvas << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << span << "\" height=\"" << span
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1=\"" << num(sx(0)) << "\" y1=\"" << kMargin << "\" x2=\"" << num(sx(0)) << "\" y2=\""
       << kCanvas - kMargin << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << kMargin << "\" y1=\"" << num(sy(0)) << "\" x2=\"" << kCanvas - kMargin << "\" y2=\""
       << num(sy(0)) << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << kMargin << "\" y=\"" << kCanvas - 12 << "\" font-size=\"11\" font-family=\"monospace\">["
     << num(lo) << ", " << num(hi) << "]^2, n=" << samples.rows() << "</text>\n";
  os << "<g fill=\"#1f77b4\" fill-opacity=\"0.35\">\n";
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    os << "<circle cx=\"" << num(sx(samples(i, 0))) << "\" cy=\"" << num(sy(samples(i, 1))) << "\" r=\"1.5\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string blobs_svg(const Matrix& samples, int height, int width, int max_tiles) {
  if (samples.rows() == 0) throw ValidationError("cannot plot an empty sample file");
  if (static_cast<Eigen::Index>(height) * width != samples.cols()) throw ValidationError("blob grid size mismatch");
  const int tiles = static_cast<int>(std::min<Eigen::Index>(samples.rows(), max_tiles));
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tiles))));
  const int rows = (tiles + cols - 1) / cols;
  const int cell = std::max(2, 160 / std::max(height, width));
  const int gap = 8;
  const int tw = width * cell;
  const int th = height * cell;
  const int w = cols * tw + (cols + 1) * gap;
  const int h = rows * th + (rows + 1) * gap;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#444\"/>\n";
  for (int k = 0; k < tiles; ++k) {
    const int ox = gap + (k % cols) * (tw + gap);
    // Row 0 holds the lowest y, so draw it at the bottom.
    const int oy = gap + (k / cols) * (th + gap);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double v = std::clamp((samples(k, r * width + c) + 1.0) / 2.0, 0.0, 1.0);
        const int g = static_cast<int>(std::lround(255.0 * v));
        os << "<rect x=\"" << ox + c * cell << "\" y=\"" << oy + (height - 1 - r) * cell << "\" width=\"" << cell
           << "\" height=\"" << cell << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace compdiff::cli
