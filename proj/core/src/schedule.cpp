// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "compdiff/errors.hpp"

namespace compdiff {

ScheduleKind parse_schedule_kind(std::string_view text) {
  if (text == "linear") return ScheduleKind::linear;
  if (text == "cosine") return ScheduleKind::cosine;
  throw ValidationError("unknown schedule kind '" + std::string(text) + "'");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::linear ? "linear" : "cosine";
}

SigmaVariant parse_sigma_variant(std::string_view text) {
  if (text == "beta") return SigmaVariant::beta;
  if (text == "beta_tilde") return SigmaVariant::beta_tilde;
  throw ValidationError("unknown sigma variant '" + std::string(text) + "'");
}

std::string to_string(SigmaVariant variant) {
  return variant == SigmaVariant::beta ? "beta" : "beta_tilde";
}

NoiseSchedule NoiseSchedule::build(ScheduleKind kind, int steps) {
  if (steps < 1) throw ValidationError("schedule needs at least one step, got " + std::to_string(steps));
  if (kind != ScheduleKind::linear && kind != ScheduleKind::cosine) {
    throw ValidationError("unknown schedule kind");
  }
  NoiseSchedule s(kind, steps);
  s.beta_.assign(steps + 1, 0.0);
  s.alpha_bar_.assign(steps + 1, 1.0);

  if (kind == ScheduleKind::linear) {
    for (int t = 1; t <= steps; ++t) {
      const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
      s.beta_[t] = kLinearBetaStart + frac * (kLinearBetaEnd - kLinearBetaStart);
    }
  } else {
    auto curve = [](double u) {
      const double c = std::cos((u + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = curve(0.0);
    double prev = 1.0;
    for (int t = 1; t <= steps; ++t) {
      const double ab = curve(static_cast<double>(t) / steps) / f0;
      s.beta_[t] = std::min(1.0 - ab / prev, kMaxBeta);
      prev = ab;
    }
  }

  for (int t = 1; t <= steps; ++t) {
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.beta_[t]);
  }
  return s;
}

void NoiseSchedule::check_step(int t, int lo) const {
  if (t < lo || t > steps_) {
    throw ValidationError("step " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(steps_) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_step(t, 1);
  return beta_[t];
}

double NoiseSchedule::alpha(int t) const {
  check_step(t, 1);
  return 1.0 - beta_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(t, 0);
  return alpha_bar_[t];
}

MarginalCoeffs NoiseSchedule::marginal(int t) const {
  check_step(t, 0);
  return {std::sqrt(alpha_bar_[t]), std::sqrt(1.0 - alpha_bar_[t])};
}

double NoiseSchedule::posterior_sigma(int t, SigmaVariant variant) const {
  check_step(t, 1);
  if (variant == SigmaVariant::beta) return std::sqrt(beta_[t]);
  const double ratio = (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]);
  return std::sqrt(beta_[t] * ratio);
}

}  // namespace compdiff
