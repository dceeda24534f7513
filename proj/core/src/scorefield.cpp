// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/scorefield.hpp"

#include <cmath>
#include <sstream>

#include "compdiff/errors.hpp"

namespace compdiff {

Matrix ScoreField::epsilon(const Matrix& x, int t, const ConceptLabel& label) const {
  if (x.cols() != dim()) {
    throw ValidationError("field " + id() + " expects dimension " + std::to_string(dim()) + ", got " +
                          std::to_string(x.cols()));
  }
  if (t < 1 || t > schedule().steps()) {
    throw ValidationError("step " + std::to_string(t) + " outside [1, " + std::to_string(schedule().steps()) + "]");
  }
  if (!supports(label)) throw ValidationError("field " + id() + " has no concept " + label.str());
  return evaluate(x, t, label);
}

Vector ScoreField::epsilon(const Vector& x, int t, const ConceptLabel& label) const {
  const Matrix row = x.transpose();
  return epsilon(row, t, label).row(0).transpose();
}

void GaussianConceptSpec::validate() const {
  if (mean.size() == 0) throw ValidationError("Gaussian concept has zero dimension");
  if (mean.size() != var.size()) throw ValidationError("Gaussian concept mean/var dimension mismatch");
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    if (!(var[i] > 0.0) || !std::isfinite(var[i])) {
      throw ValidationError("Gaussian concept variance must be positive and finite");
    }
    if (!std::isfinite(mean[i])) throw ValidationError("Gaussian concept mean must be finite");
  }
}

Vector diffused_variance(const GaussianConceptSpec& spec, const NoiseSchedule& sched, int t) {
  const double ab = sched.alpha_bar(t);
  return (ab * spec.var.array() + (1.0 - ab)).matrix();
}

Matrix epsilon_of_gaussian(const GaussianConceptSpec& spec, const NoiseSchedule& sched, const Matrix& x, int t) {
  spec.validate();
  if (t < 1 || t > sched.steps()) throw ValidationError("step out of range for Gaussian epsilon");
  if (x.cols() != spec.dim()) throw ValidationError("dimension mismatch in Gaussian epsilon");
  const auto [scale, noise_std] = sched.marginal(t);
  const RowVector center = (scale * spec.mean).transpose();
  const RowVector inv_var = diffused_variance(spec, sched, t).cwiseInverse().transpose();
  Matrix out = x.rowwise() - center;
  out.array().rowwise() *= (noise_std * inv_var).array();
  return out;
}

Vector epsilon_of_gaussian(const GaussianConceptSpec& spec, const NoiseSchedule& sched, const Vector& x, int t) {
  const Matrix row = x.transpose();
  return epsilon_of_gaussian(spec, sched, row, t).row(0).transpose();
}

AnalyticGaussianField::AnalyticGaussianField(NoiseSchedule sched, GaussianConceptSpec uncond,
                                             std::map<ConceptLabel, GaussianConceptSpec> concepts)
    : sched_(std::move(sched)), uncond_(std::move(uncond)), concepts_(std::move(concepts)) {
  uncond_.validate();
  for (const auto& [label, spec] : concepts_) {
    if (label.is_null()) throw ValidationError("the null label is reserved for the unconditional spec");
    spec.validate();
    if (spec.dim() != uncond_.dim()) throw ValidationError("concept " + label.str() + " has the wrong dimension");
  }
}

std::string AnalyticGaussianField::id() const {
  std::ostringstream os;
  os << "analytic-gaussian(d=" << dim() << ",concepts=" << concepts_.size() << ")";
  return os.str();
}

bool AnalyticGaussianField::supports(const ConceptLabel& label) const {
  return label.is_null() || concepts_.contains(label);
}

const GaussianConceptSpec& AnalyticGaussianField::spec(const ConceptLabel& label) const {
  if (label.is_null()) return uncond_;
  auto it = concepts_.find(label);
  if (it == concepts_.end()) throw ValidationError("unknown concept " + label.str());
  return it->second;
}

Matrix AnalyticGaussianField::evaluate(const Matrix& x, int t, const ConceptLabel& label) const {
  return epsilon_of_gaussian(spec(label), sched_, x, t);
}

}  // namespace compdiff
