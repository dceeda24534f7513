// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <map>
#include <string>

#include "compdiff/label.hpp"
#include "compdiff/linalg.hpp"
#include "compdiff/schedule.hpp"

namespace compdiff {

/// Evaluator of the noise prediction eps(x_t, t | label).
///
/// eps relates to the score of the time-t marginal by
/// eps = -sqrt(1 - alpha_bar_t) * grad log p_t(x_t). Implementations are
/// immutable after construction and evaluate whole batches (one point per
/// row); evaluation must be a pure function of its arguments.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  virtual int dim() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;
  virtual std::string id() const = 0;
  virtual bool supports(const ConceptLabel& label) const = 0;

  Matrix epsilon(const Matrix& x, int t, const ConceptLabel& label) const;
  Vector epsilon(const Vector& x, int t, const ConceptLabel& label) const;

 protected:
  // Called after dimension, step and label checks have passed.
  virtual Matrix evaluate(const Matrix& x, int t, const ConceptLabel& label) const = 0;
};

// Free-function form used by the compose and sample code.
inline Matrix field_eval(const ScoreField& field, const Matrix& x, int t, const ConceptLabel& label) {
  return field.epsilon(x, t, label);
}

struct GaussianConceptSpec {
  Vector mean;
  Vector var;  // per-axis variances

  int dim() const { return static_cast<int>(mean.size()); }
  void validate() const;
};

// Closed-form eps of N(mean, diag(var)) diffused to step t:
// sqrt(1-ab) * (x - sqrt(ab) mean) / (ab var + 1 - ab), per axis.
Vector epsilon_of_gaussian(const GaussianConceptSpec& spec, const NoiseSchedule& sched, const Vector& x, int t);
Matrix epsilon_of_gaussian(const GaussianConceptSpec& spec, const NoiseSchedule& sched, const Matrix& x, int t);

// Per-axis diffused variance ab*var + 1 - ab.
Vector diffused_variance(const GaussianConceptSpec& spec, const NoiseSchedule& sched, int t);

/// Field whose concepts are diagonal Gaussians; the null label maps to the
/// unconditional spec.
class AnalyticGaussianField final : public ScoreField {
 public:
  AnalyticGaussianField(NoiseSchedule sched, GaussianConceptSpec uncond,
                        std::map<ConceptLabel, GaussianConceptSpec> concepts);

  int dim() const override { return uncond_.dim(); }
  const NoiseSchedule& schedule() const override { return sched_; }
  std::string id() const override;
  bool supports(const ConceptLabel& label) const override;

  const GaussianConceptSpec& spec(const ConceptLabel& label) const;
  const GaussianConceptSpec& uncond() const { return uncond_; }
  const std::map<ConceptLabel, GaussianConceptSpec>& concepts() const { return concepts_; }

 protected:
  Matrix evaluate(const Matrix& x, int t, const ConceptLabel& label) const override;

 private:
  NoiseSchedule sched_;
  GaussianConceptSpec uncond_;
  std::map<ConceptLabel, GaussianConceptSpec> concepts_;
};

/// Forwards to another field and counts evaluate() calls (one per batch).
class CountingField final : public ScoreField {
 public:
  explicit CountingField(const ScoreField& inner) : inner_(inner) {}

  int dim() const override { return inner_.dim(); }
  const NoiseSchedule& schedule() const override { return inner_.schedule(); }
  std::string id() const override { return inner_.id(); }
  bool supports(const ConceptLabel& label) const override { return inner_.supports(label); }

  long calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 protected:
  Matrix evaluate(const Matrix& x, int t, const ConceptLabel& label) const override {
    ++calls_;
    return inner_.epsilon(x, t, label);
  }

 private:
  const ScoreField& inner_;
  mutable std::atomic<long> calls_{0};
};

}  // namespace compdiff
