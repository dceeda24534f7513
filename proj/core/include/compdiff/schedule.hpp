// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace compdiff {

enum class ScheduleKind { linear, cosine };
enum class SigmaVariant { beta, beta_tilde };

ScheduleKind parse_schedule_kind(std::string_view text);
std::string to_string(ScheduleKind kind);
SigmaVariant parse_sigma_variant(std::string_view text);
std::string to_string(SigmaVariant variant);

struct MarginalCoeffs {
  double scale;      // sqrt(alpha_bar_t)
  double noise_std;  // sqrt(1 - alpha_bar_t)
};

/// Discrete-time diffusion coefficients for steps t = 1..T.
///
/// Index conventions: beta/alpha are defined for 1 <= t <= T, alpha_bar for
/// 0 <= t <= T with alpha_bar(0) == 1. alpha_bar is always the running
/// product of alpha, including for the cosine kind where the betas are first
/// derived from the closed-form curve and then clipped.
class NoiseSchedule {
 public:
  static constexpr double kCosineOffset = 0.008;
  static constexpr double kMaxBeta = 0.999;
  static constexpr double kLinearBetaStart = 1e-4;
  static constexpr double kLinearBetaEnd = 0.02;

  static NoiseSchedule build(ScheduleKind kind, int steps);

  ScheduleKind kind() const noexcept { return kind_; }
  int steps() const noexcept { return steps_; }

  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;

  MarginalCoeffs marginal(int t) const;
  double posterior_sigma(int t, SigmaVariant variant) const;

  bool operator==(const NoiseSchedule&) const = default;

 private:
  NoiseSchedule(ScheduleKind kind, int steps) : kind_(kind), steps_(steps) {}
  void check_step(int t, int lo) const;

  ScheduleKind kind_;
  int steps_;
  std::vector<double> beta_;       // beta_[t], index 0 unused
  std::vector<double> alpha_bar_;  // alpha_bar_[0] == 1
};

}  // namespace compdiff
