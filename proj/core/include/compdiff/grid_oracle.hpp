// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "compdiff/scorefield.hpp"

namespace compdiff {

struct GridSpec {
  double lo = -4.0;
  double hi = 4.0;
  int nodes = 512;  // per axis

  double spacing() const { return (hi - lo) / (nodes - 1); }
  double node(int i) const { return lo + i * spacing(); }
};

/// Brute-force eps for a 2-D density tabulated on a regular grid.
///
/// The diffused marginal is p_t(y) = a^-2 (p0 * G_{s/a})(y / a) with
/// a = sqrt(ab_t), s = sqrt(1 - ab_t): the base density is smoothed in
/// data coordinates with a Gaussian of std s/a (truncated at 6 std) and
/// read back at the rescaled point. eps is -s * grad log p_t from central
/// differences with a one-cell step.
///
/// When s/a is at least one cell the smoothing is a direct quadrature at
/// arbitrary points. Below that, quadrature against a kernel narrower than
/// the grid ripples, so the smoothing is done at grid nodes with a
/// discretely normalised kernel and the node gradients are interpolated
/// bilinearly.
///
/// Only the null label is supported: the field represents one density.
class GridOracleField final : public ScoreField {
 public:
  using Density = std::function<double(double x, double y)>;

  GridOracleField(NoiseSchedule sched, GridSpec grid, const Density& density);

  int dim() const override { return 2; }
  const NoiseSchedule& schedule() const override { return sched_; }
  std::string id() const override;
  bool supports(const ConceptLabel& label) const override { return label.is_null(); }

  const GridSpec& grid() const { return grid_; }
  // Normalised density at node (ix, iy).
  double density_at(int ix, int iy) const { return density_[index(ix, iy)]; }
  // Quadrature sum of density * h^2; 1 after construction.
  double total_mass() const;

  Vector epsilon_at(const Vector& x, int t) const;

 protected:
  Matrix evaluate(const Matrix& x, int t, const ConceptLabel& label) const override;

 private:
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(ix) * grid_.nodes + iy; }
  double log_smoothed_direct(double zx, double zy, double width) const;
  double log_smoothed_node(int ix, int iy, const std::vector<double>& kernel) const;
  void check_inside(const Vector& x) const;

  NoiseSchedule sched_;
  GridSpec grid_;
  std::vector<double> density_;
  std::vector<double> log_density_;
};

Vector grid_oracle_epsilon(const GridOracleField& field, const Vector& x, int t);

// Square box covering mean +- extent_std * std on both axes.
GridSpec grid_around(const GaussianConceptSpec& spec, double extent_std, int nodes);

// Density of a diagonal Gaussian, for building oracles of analytic specs.
GridOracleField::Density gaussian_density(const GaussianConceptSpec& spec);

}  // namespace compdiff
