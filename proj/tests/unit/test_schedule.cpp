// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "compdiff/errors.hpp"
#include "compdiff/schedule.hpp"

namespace compdiff {
namespace {

// Reference alpha_bar straight from the cosine curve, with the clip applied
// to the step ratio and the product taken afterwards.
std::vector<double> cosine_oracle(int T) {
  auto f = [](double u) {
    const double c = std::cos((u + 0.008) / 1.008 * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> ab(T + 1, 1.0);
  double prev_raw = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double raw = f(static_cast<double>(t) / T) / f(0.0);
    const double beta = std::min(1.0 - raw / prev_raw, 0.999);
    ab[t] = ab[t - 1] * (1.0 - beta);
    prev_raw = raw;
  }
  return ab;
}

std::vector<double> linear_oracle(int T) {
  std::vector<double> ab(T + 1, 1.0);
  for (int t = 1; t <= T; ++t) {
    const double beta = T == 1 ? 1e-4 : 1e-4 + (0.02 - 1e-4) * (t - 1) / (T - 1);
    ab[t] = ab[t - 1] * (1.0 - beta);
  }
  return ab;
}

TEST(Schedule, CosineMidpoint) {
  const auto s = NoiseSchedule::build(ScheduleKind::cosine, 1000);
  EXPECT_NEAR(s.alpha_bar(500), 0.4934, 1e-3);
}

TEST(Schedule, AlphaBarZeroIsOne) {
  for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
    EXPECT_EQ(NoiseSchedule::build(kind, 1000).alpha_bar(0), 1.0);
  }
}

TEST(Schedule, LinearFinalAlphaBar) {
  const auto s = NoiseSchedule::build(ScheduleKind::linear, 1000);
  EXPECT_NEAR(s.alpha_bar(1000), 4.04e-5, 0.02 * 4.04e-5);
}

TEST(Schedule, MatchesLoopOracles) {
  for (int T : {1, 10, 100, 1000}) {
    const auto c = NoiseSchedule::build(ScheduleKind::cosine, T);
    const auto l = NoiseSchedule::build(ScheduleKind::linear, T);
    const auto co = cosine_oracle(T);
    const auto lo = linear_oracle(T);
    for (int t = 0; t <= T; ++t) {
      EXPECT_NEAR(c.alpha_bar(t), co[t], 1e-12 * std::max(1.0, co[t])) << "cosine T=" << T << " t=" << t;
      EXPECT_NEAR(l.alpha_bar(t), lo[t], 1e-12) << "linear T=" << T << " t=" << t;
    }
  }
}

TEST(Schedule, Invariants) {
  for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
    for (int T : {1, 2, 50, 1000, 4000}) {
      const auto s = NoiseSchedule::build(kind, T);
      EXPECT_LT(s.alpha_bar(1), 1.0);
      EXPECT_GT(s.alpha_bar(T), 0.0);
      for (int t = 1; t <= T; ++t) {
        ASSERT_GT(s.beta(t), 0.0);
        ASSERT_LE(s.beta(t), 0.999);
        ASSERT_EQ(s.alpha(t), 1.0 - s.beta(t));
        ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
        ASSERT_NEAR(s.alpha_bar(t), s.alpha_bar(t - 1) * s.alpha(t), 1e-15);
      }
    }
  }
}

TEST(Schedule, CosineLastBetaIsClipped) {
  const auto s = NoiseSchedule::build(ScheduleKind::cosine, 1000);
  EXPECT_EQ(s.beta(1000), 0.999);
}

TEST(Schedule, MarginalCoefficients) {
  const auto s = NoiseSchedule::build(ScheduleKind::cosine, 1000);
  const auto m0 = s.marginal(0);
  EXPECT_EQ(m0.scale, 1.0);
  EXPECT_EQ(m0.noise_std, 0.0);
  const auto m = s.marginal(500);
  EXPECT_NEAR(m.scale, 0.7024, 1e-3);
  EXPECT_NEAR(m.noise_std, 0.7118, 1e-3);
  for (int t = 0; t <= 1000; ++t) {
    const auto c = s.marginal(t);
    ASSERT_NEAR(c.scale * c.scale + c.noise_std * c.noise_std, 1.0, 1e-12);
  }
}

TEST(Schedule, PosteriorSigma) {
  const auto lin = NoiseSchedule::build(ScheduleKind::linear, 1000);
  EXPECT_EQ(lin.posterior_sigma(1, SigmaVariant::beta_tilde), 0.0);
  EXPECT_NEAR(lin.posterior_sigma(1000, SigmaVariant::beta), std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(lin.posterior_sigma(1000, SigmaVariant::beta), 0.1414, 1e-4);
  for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
    const auto s = NoiseSchedule::build(kind, 1000);
    for (int t = 1; t <= 1000; ++t) {
      const double tilde = s.posterior_sigma(t, SigmaVariant::beta_tilde);
      const double beta = s.posterior_sigma(t, SigmaVariant::beta);
      ASSERT_GE(tilde, 0.0);
      ASSERT_LE(tilde, beta);
      const double expect = std::sqrt(s.beta(t) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t)));
      ASSERT_NEAR(tilde, expect, 1e-15);
    }
  }
}

TEST(Schedule, Errors) {
  EXPECT_THROW(NoiseSchedule::build(ScheduleKind::cosine, 0), ValidationError);
  EXPECT_THROW(parse_schedule_kind("quadratic"), ValidationError);
  EXPECT_THROW(parse_sigma_variant("fixed"), ValidationError);
  const auto s = NoiseSchedule::build(ScheduleKind::cosine, 10);
  EXPECT_THROW(s.marginal(11), ValidationError);
  EXPECT_THROW(s.marginal(-1), ValidationError);
  EXPECT_THROW(s.posterior_sigma(0, SigmaVariant::beta), ValidationError);
  EXPECT_THROW(s.beta(0), ValidationError);
}

TEST(Schedule, NamesRoundTrip) {
  for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) EXPECT_EQ(parse_schedule_kind(to_string(kind)), kind);
  for (auto v : {SigmaVariant::beta, SigmaVariant::beta_tilde}) EXPECT_EQ(parse_sigma_variant(to_string(v)), v);
}

TEST(Schedule, RebuildIsIdentical) {
  EXPECT_EQ(NoiseSchedule::build(ScheduleKind::cosine, 777), NoiseSchedule::build(ScheduleKind::cosine, 777));
}

TEST(Schedule, CosineRefinement) {
  const auto a = NoiseSchedule::build(ScheduleKind::cosine, 500);
  const auto b = NoiseSchedule::build(ScheduleKind::cosine, 1000);
  for (int t = 0; t <= 500; ++t) EXPECT_NEAR(a.alpha_bar(t), b.alpha_bar(2 * t), 1e-3) << t;
}

}  // namespace
}  // namespace compdiff
