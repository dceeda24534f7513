// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "compdiff/errors.hpp"

namespace compdiff {
namespace {

constexpr double kTruncation = 6.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
  double peak = kNegInf;
  for (double v : terms) peak = std::max(peak, v);
  if (peak == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

}  // namespace

GridOracleField::GridOracleField(NoiseSchedule sched, GridSpec grid, const Density& density)
    : sched_(std::move(sched)), grid_(grid) {
  if (grid_.nodes < 16 || !(grid_.hi > grid_.lo)) throw ValidationError("grid oracle needs >= 16 nodes and hi > lo");
  const std::size_t count = static_cast<std::size_t>(grid_.nodes) * grid_.nodes;
  density_.resize(count);
  double mass = 0.0;
  for (int ix = 0; ix < grid_.nodes; ++ix) {
    for (int iy = 0; iy < grid_.nodes; ++iy) {
      const double v = density(grid_.node(ix), grid_.node(iy));
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("grid density must be finite and nonnegative");
      density_[index(ix, iy)] = v;
      mass += v;
    }
  }
  const double h = grid_.spacing();
  mass *= h * h;
  if (!(mass > 0.0)) throw ValidationError("grid density has zero mass on the grid");
  log_density_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    density_[i] /= mass;
    log_density_[i] = density_[i] > 0.0 ? std::log(density_[i]) : kNegInf;
  }
}

std::string GridOracleField::id() const {
  std::ostringstream os;
  os << "grid-oracle(" << grid_.nodes << "x" << grid_.nodes << ",[" << grid_.lo << "," << grid_.hi << "])";
  return os.str();
}

double GridOracleField::total_mass() const {
  double mass = 0.0;
  for (double v : density_) mass += v;
  const double h = grid_.spacing();
  return mass * h * h;
}

void GridOracleField::check_inside(const Vector& x) const {
  const double margin = 3.0 * grid_.spacing();
  for (int k = 0; k < 2; ++k) {
    if (!(x[k] > grid_.lo + margin && x[k] < grid_.hi - margin)) {
      throw ValidationError("grid oracle query must be at least 3 cells inside the grid box");
    }
  }
}

// log of sum_c p0(c) exp(-|z - c|^2 / (2 width^2)) over nodes within the
// truncation window; the omitted Gaussian normalisation is constant in z.
double GridOracleField::log_smoothed_direct(double zx, double zy, double width) const {
  const double h = grid_.spacing();
  const double reach = kTruncation * width;
  auto node_range = [&](double z) {
    const int first = std::max(0, static_cast<int>(std::ceil((z - reach - grid_.lo) / h)));
    const int last = std::min(grid_.nodes - 1, static_cast<int>(std::floor((z + reach - grid_.lo) / h)));
    return std::pair{first, last};
  };
  const auto [x0, x1] = node_range(zx);
  const auto [y0, y1] = node_range(zy);
  if (x0 > x1 || y0 > y1) throw RuntimeFailure("grid oracle kernel window misses the grid entirely");

  const double inv2w2 = 1.0 / (2.0 * width * width);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(x1 - x0 + 1) * (y1 - y0 + 1));
  for (int ix = x0; ix <= x1; ++ix) {
    const double dx = zx - grid_.node(ix);
    for (int iy = y0; iy <= y1; ++iy) {
      const double lp = log_density_[index(ix, iy)];
      if (lp == kNegInf) continue;
      const double dy = zy - grid_.node(iy);
      terms.push_back(lp - (dx * dx + dy * dy) * inv2w2);
    }
  }
  return log_sum_exp(terms);
}

// Smoothed density at a node with a discretely normalised separable kernel
// (kernel[k] for offsets -K..K, stored at k + K).
double GridOracleField::log_smoothed_node(int ix, int iy, const std::vector<double>& kernel) const {
  const int reach = static_cast<int>(kernel.size() / 2);
  double acc = 0.0;
  for (int kx = -reach; kx <= reach; ++kx) {
    const int jx = ix + kx;
    if (jx < 0 || jx >= grid_.nodes) continue;
    double row = 0.0;
    for (int ky = -reach; ky <= reach; ++ky) {
      const int jy = iy + ky;
      if (jy < 0 || jy >= grid_.nodes) continue;
      row += density_[index(jx, jy)] * kernel[ky + reach];
    }
    acc += row * kernel[kx + reach];
  }
  return acc > 0.0 ? std::log(acc) : kNegInf;
}

Vector GridOracleField::epsilon_at(const Vector& x, int t) const {
  if (x.size() != 2) throw ValidationError("grid oracle is two-dimensional");
  if (t < 1 || t > sched_.steps()) throw ValidationError("grid oracle step out of range");
  check_inside(x);

  const auto [a, s] = sched_.marginal(t);
  const double width = s / a;  // kernel std in data coordinates
  const double h = grid_.spacing();
  Vector grad(2);

  if (width >= h) {
    for (int k = 0; k < 2; ++k) {
      Vector plus = x, minus = x;
      plus[k] += h;
      minus[k] -= h;
      const double lp = log_smoothed_direct(plus[0] / a, plus[1] / a, width);
      const double lm = log_smoothed_direct(minus[0] / a, minus[1] / a, width);
      grad[k] = (lp - lm) / (2.0 * h);
    }
  } else {
    const int reach = std::max(1, static_cast<int>(std::ceil(kTruncation * width / h)));
    std::vector<double> kernel(2 * reach + 1);
    double norm = 0.0;
    for (int k = -reach; k <= reach; ++k) {
      const double r = k * h / width;
      kernel[k + reach] = std::exp(-0.5 * r * r);
      norm += kernel[k + reach];
    }
    for (double& w : kernel) w /= norm;

    const double zx = x[0] / a, zy = x[1] / a;
    const int bx = static_cast<int>(std::floor((zx - grid_.lo) / h));
    const int by = static_cast<int>(std::floor((zy - grid_.lo) / h));
    if (bx < 1 || by < 1 || bx + 2 >= grid_.nodes || by + 2 >= grid_.nodes) {
      throw ValidationError("grid oracle query too close to the boundary");
    }
    // log-smoothed density on the 4x4 patch around the query cell
    double patch[4][4];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) patch[i][j] = log_smoothed_node(bx - 1 + i, by - 1 + j, kernel);

    const double fx = (zx - grid_.node(bx)) / h;
    const double fy = (zy - grid_.node(by)) / h;
    for (int k = 0; k < 2; ++k) {
      double g = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const int pi = i + 1, pj = j + 1;
          const double node_grad = k == 0 ? (patch[pi + 1][pj] - patch[pi - 1][pj]) / (2.0 * h)
                                          : (patch[pi][pj + 1] - patch[pi][pj - 1]) / (2.0 * h);
          const double wx = i == 0 ? 1.0 - fx : fx;
          const double wy = j == 0 ? 1.0 - fy : fy;
          g += wx * wy * node_grad;
        }
      }
      grad[k] = g / a;  // d/dy = (1/a) d/dz
    }
  }
  return -s * grad;
}

Matrix GridOracleField::evaluate(const Matrix& x, int t, const ConceptLabel&) const {
  Matrix out(x.rows(), 2);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = epsilon_at(x.row(r).transpose(), t).transpose();
  }
  return out;
}

Vector grid_oracle_epsilon(const GridOracleField& field, const Vector& x, int t) { return field.epsilon_at(x, t); }

GridOracleField::Density gaussian_density(const GaussianConceptSpec& spec) {
  spec.validate();
  if (spec.dim() != 2) throw ValidationError("gaussian_density: grid oracle densities are two-dimensional");
  const double mx = spec.mean[0], my = spec.mean[1], vx = spec.var[0], vy = spec.var[1];
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(vx * vy));
  return [=](double x, double y) {
    const double q = (x - mx) * (x - mx) / vx + (y - my) * (y - my) / vy;
    return norm * std::exp(-0.5 * q);
  };
}

GridSpec grid_around(const GaussianConceptSpec& spec, double extent_std, int nodes) {
  spec.validate();
  if (spec.dim() != 2) throw ValidationError("grid oracle is 2-D only");
  const Vector sd = spec.var.cwiseSqrt();
  GridSpec g;
  g.lo = std::min(spec.mean[0] - extent_std * sd[0], spec.mean[1] - extent_std * sd[1]);
  g.hi = std::max(spec.mean[0] + extent_std * sd[0], spec.mean[1] + extent_std * sd[1]);
  g.nodes = nodes;
  return g;
}

}  // namespace compdiff
