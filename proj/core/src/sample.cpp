// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/sample.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "compdiff/errors.hpp"
#include "compdiff/io.hpp"

namespace compdiff {

StepRule parse_step_rule(std::string_view text) {
  if (text == "standard") return StepRule::standard;
  if (text == "schematic") return StepRule::schematic;
  throw ValidationError("unknown step rule '" + std::string(text) + "' (expected standard or schematic)");
}

std::string to_string(StepRule rule) { return rule == StepRule::standard ? "standard" : "schematic"; }

double step_sigma(const NoiseSchedule& sched, int t, SigmaVariant variant) {
  if (t == 1) {
    sched.beta(t);  // range check
    return 0.0;
  }
  return sched.posterior_sigma(t, variant);
}

Matrix step_mean(const Matrix& x, int t, const Matrix& eps_hat, const NoiseSchedule& sched, const StepOptions& opts) {
  if (t < 1 || t > sched.steps()) {
    throw ValidationError("step " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps()) + "]");
  }
  if (x.rows() != eps_hat.rows() || x.cols() != eps_hat.cols()) throw ValidationError("eps shape does not match x");
  if (opts.rule == StepRule::schematic) return x - eps_hat;

  const double beta = sched.beta(t);
  const double alpha = sched.alpha(t);
  const double ab = sched.alpha_bar(t);
  const double noise_std = std::sqrt(1.0 - ab);
  if (!opts.clip_denoised) return (x - (beta / noise_std) * eps_hat) / std::sqrt(alpha);

  const double clip = *opts.clip_denoised;
  if (!(clip > 0.0)) throw ValidationError("clip_denoised must be positive");
  const double ab_prev = sched.alpha_bar(t - 1);
  const Matrix x0 = ((x - noise_std * eps_hat) / std::sqrt(ab)).cwiseMax(-clip).cwiseMin(clip);
  const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
  const double ct = std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab);
  return c0 * x0 + ct * x;
}

Vector ddpm_step(const Vector& x, int t, const Vector& eps_hat, const NoiseSchedule& sched, const StepOptions& opts,
                 Philox& rng) {
  Vector out = step_mean(Matrix(x.transpose()), t, Matrix(eps_hat.transpose()), sched, opts).row(0).transpose();
  const double sigma = step_sigma(sched, t, opts.sigma);
  if (sigma > 0.0) {
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] += sigma * rng.normal();
  }
  return out;
}

std::string SampleProvenance::to_json() const {
  nlohmann::ordered_json j;
  j["sampler"] = sampler;
  j["seed"] = seed;
  j["spec"] = spec;
  j["schedule"] = {{"kind", compdiff::to_string(schedule_kind)}, {"T", schedule_steps}};
  j["field"] = field;
  j["n"] = n;
  if (sampler == "ddpm") {
    j["rule"] = compdiff::to_string(rule);
    j["sigma_variant"] = compdiff::to_string(sigma);
    j["clip_denoised"] = clip_denoised ? nlohmann::ordered_json(*clip_denoised) : nlohmann::ordered_json(nullptr);
  } else {
    j["t_eval"] = t_eval;
    j["steps"] = langevin_steps;
    j["lambda"] = lambda;
  }
  return j.dump(2) + "\n";
}

std::string describe_spec(const CompositionSpec& spec) {
  return format_compose_spec(spec, [](const ConceptLabel& l) { return l.str(); });
}

namespace {

std::vector<Philox> row_streams(std::uint64_t seed, std::uint64_t root, std::int64_t first, std::int64_t count) {
  std::vector<Philox> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    out.emplace_back(seed, derive_stream(root, static_cast<std::uint64_t>(first + i)));
  }
  return out;
}

void add_noise(Matrix& x, double sigma, std::vector<Philox>& rngs) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) += sigma * rngs[r].normal();
  }
}

void check_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) throw RuntimeFailure(std::string(what) + " produced non-finite values");
}

}  // namespace

SampleBatch ddpm_sample(const ScoreField& field, const CompositionSpec& spec, std::int64_t n, std::uint64_t seed,
                        const DdpmOptions& opts, std::string spec_text) {
  if (n < 1) throw ValidationError("sample count must be at least 1");
  if (opts.chunk_rows < 1) throw ValidationError("chunk_rows must be positive");
  if (opts.trajectory_stride < 0) throw ValidationError("trajectory stride must be nonnegative");
  if (opts.step.clip_denoised && opts.step.rule != StepRule::standard) {
    throw ValidationError("clip_denoised applies to the standard rule only");
  }
  const NoiseSchedule& sched = field.schedule();
  const int T = sched.steps();
  const int d = field.dim();

  SampleBatch batch;
  batch.samples.resize(n, d);
  std::vector<int> kept;
  if (opts.trajectory_stride > 0) {
    kept.push_back(T);
    for (int t = T - 1; t >= 0; --t) {
      if (t % opts.trajectory_stride == 0) kept.push_back(t);
    }
    batch.trajectory = Trajectory{kept, std::vector<Matrix>(kept.size(), Matrix(n, d))};
  }

  for (std::int64_t first = 0; first < n; first += opts.chunk_rows) {
    const std::int64_t rows = std::min<std::int64_t>(opts.chunk_rows, n - first);
    std::vector<Philox> rngs = row_streams(seed, streams::kSampleRow, first, rows);
    Matrix x(rows, d);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (int j = 0; j < d; ++j) x(r, j) = rngs[r].normal();
    }
    std::size_t slot = 0;
    auto keep = [&](int t) {
      if (batch.trajectory && slot < kept.size() && kept[slot] == t) {
        batch.trajectory->states[slot].middleRows(first, rows) = x;
        ++slot;
      }
    };
    keep(T);
    for (int t = T; t >= 1; --t) {
      const Matrix eps = composed_epsilon(field, x, t, spec);
      x = step_mean(x, t, eps, sched, opts.step);
      const double sigma = step_sigma(sched, t, opts.step.sigma);
      if (sigma > 0.0) add_noise(x, sigma, rngs);
      keep(t - 1);
    }
    check_finite(x, "sampling");
    batch.samples.middleRows(first, rows) = x;
  }

  SampleProvenance& p = batch.provenance;
  p.sampler = "ddpm";
  p.seed = seed;
  p.spec = spec_text.empty() ? describe_spec(spec) : std::move(spec_text);
  p.schedule_kind = sched.kind();
  p.schedule_steps = T;
  p.rule = opts.step.rule;
  p.sigma = opts.step.sigma;
  p.clip_denoised = opts.step.clip_denoised;
  p.field = field.id();
  p.n = n;
  return batch;
}

SampleBatch langevin_sample(const ScoreField& field, const CompositionSpec& spec, std::int64_t n, std::uint64_t seed,
                            const LangevinOptions& opts, std::string spec_text) {
  if (n < 1) throw ValidationError("sample count must be at least 1");
  if (opts.steps < 1) throw ValidationError("Langevin needs at least one step");
  if (!(opts.lambda > 0.0) || !std::isfinite(opts.lambda)) throw ValidationError("Langevin step size must be positive");
  if (opts.chunk_rows < 1) throw ValidationError("chunk_rows must be positive");
  const NoiseSchedule& sched = field.schedule();
  if (opts.t_eval < 1 || opts.t_eval > sched.steps()) throw ValidationError("Langevin t_eval out of range");
  const int d = field.dim();
  const double noise_std = sched.marginal(opts.t_eval).noise_std;
  const double drift = 0.5 * opts.lambda / noise_std;
  const double kick = std::sqrt(opts.lambda);

  SampleBatch batch;
  batch.samples.resize(n, d);
  for (std::int64_t first = 0; first < n; first += opts.chunk_rows) {
    const std::int64_t rows = std::min<std::int64_t>(opts.chunk_rows, n - first);
    std::vector<Philox> rngs = row_streams(seed, streams::kLangevinRow, first, rows);
    Matrix x(rows, d);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (int j = 0; j < d; ++j) x(r, j) = rngs[r].normal();
    }
    for (int k = 0; k < opts.steps; ++k) {
      x -= drift * composed_epsilon(field, x, opts.t_eval, spec);
      add_noise(x, kick, rngs);
    }
    check_finite(x, "Langevin sampling");
    batch.samples.middleRows(first, rows) = x;
  }

  SampleProvenance& p = batch.provenance;
  p.sampler = "langevin";
  p.seed = seed;
  p.spec = spec_text.empty() ? describe_spec(spec) : std::move(spec_text);
  p.schedule_kind = sched.kind();
  p.schedule_steps = sched.steps();
  p.field = field.id();
  p.n = n;
  p.t_eval = opts.t_eval;
  p.langevin_steps = opts.steps;
  p.lambda = opts.lambda;
  return batch;
}

}  // namespace compdiff
