// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compdiff/compose.hpp"
#include "compdiff/linalg.hpp"
#include "compdiff/rng.hpp"
#include "compdiff/schedule.hpp"
#include "compdiff/scorefield.hpp"

namespace compdiff {

// standard: DDPM posterior mean (x - beta / sqrt(1 - ab) eps) / sqrt(alpha).
// schematic: x - eps, kept for comparison with the simplified update.
enum class StepRule { standard, schematic };
StepRule parse_step_rule(std::string_view text);
std::string to_string(StepRule rule);

struct StepOptions {
  StepRule rule = StepRule::standard;
  SigmaVariant sigma = SigmaVariant::beta_tilde;
  // Standard rule only: estimate x0 from eps, clamp it to [-clip, clip] and
  // take the posterior mean from the clamped estimate. Off by default.
  std::optional<double> clip_denoised;
};

// Noise scale used at step t; 0 at t = 1.
double step_sigma(const NoiseSchedule& sched, int t, SigmaVariant variant);

// Deterministic part of the update for a batch of rows.
Matrix step_mean(const Matrix& x, int t, const Matrix& eps_hat, const NoiseSchedule& sched, const StepOptions& opts);

// One reverse step for one point; draws dim normals from `rng` when the
// step's sigma is positive.
Vector ddpm_step(const Vector& x, int t, const Vector& eps_hat, const NoiseSchedule& sched, const StepOptions& opts,
                 Philox& rng);

struct SampleProvenance {
  std::string sampler;  // "ddpm" or "langevin"
  std::uint64_t seed = 0;
  std::string spec;     // canonical text of the composition
  ScheduleKind schedule_kind = ScheduleKind::cosine;
  int schedule_steps = 0;
  StepRule rule = StepRule::standard;
  SigmaVariant sigma = SigmaVariant::beta_tilde;
  std::optional<double> clip_denoised;
  std::string field;
  std::int64_t n = 0;
  // Langevin only.
  int t_eval = 0;
  int langevin_steps = 0;
  double lambda = 0.0;

  std::string to_json() const;
};

struct Trajectory {
  std::vector<int> steps;      // x_T first, x_0 (step 0) last
  std::vector<Matrix> states;
};

struct SampleBatch {
  Matrix samples;
  SampleProvenance provenance;
  std::optional<Trajectory> trajectory;
};

struct DdpmOptions {
  StepOptions step;
  // Store every stride-th state (and always x_T and x_0); 0 disables.
  int trajectory_stride = 0;
  // Rows evaluated together. Results do not depend on it, but it is fixed
  // so batched floating-point evaluation is identical across runs.
  int chunk_rows = 500;
};

// Ancestral sampling of the composition from x_T ~ N(0, I). Row i uses its
// own stream derive_stream(kSampleRow, i) of `seed` for both the initial
// draw and every step's noise.
SampleBatch ddpm_sample(const ScoreField& field, const CompositionSpec& spec, std::int64_t n, std::uint64_t seed,
                        const DdpmOptions& opts = {}, std::string spec_text = {});

struct LangevinOptions {
  int t_eval = 1;
  int steps = 1000;
  double lambda = 0.005;
  int chunk_rows = 500;
};

// x <- x - lambda/2 * eps/sqrt(1 - ab) + sqrt(lambda) z from x ~ N(0, I),
// with eps the composed prediction at the fixed step t_eval.
SampleBatch langevin_sample(const ScoreField& field, const CompositionSpec& spec, std::int64_t n, std::uint64_t seed,
                            const LangevinOptions& opts, std::string spec_text = {});

// Text form of a spec when no concept names are available (labels as
// "#id" / "@x,y").
std::string describe_spec(const CompositionSpec& spec);

}  // namespace compdiff
