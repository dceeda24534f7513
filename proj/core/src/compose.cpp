// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/compose.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "compdiff/errors.hpp"

namespace compdiff {

void Term::validate() const {
  if (label.is_null()) throw ValidationError("a composition term cannot use the null label");
  if (!std::isfinite(weight) || weight < 0.0) {
    throw ValidationError("term weight for " + label.str() + " must be finite and nonnegative");
  }
  if (label.is_coord()) {
    for (double v : label.coords()) {
      if (!std::isfinite(v)) throw ValidationError("coordinate label must be finite");
    }
  }
}

bool canonical_less(const Term& a, const Term& b) {
  if (a.label < b.label) return true;
  if (b.label < a.label) return false;
  if (a.polarity != b.polarity) return a.polarity < b.polarity;
  return a.weight < b.weight;
}

CompositionSpec::CompositionSpec(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw ValidationError("a composition needs at least one term");
  bool any_positive = false;
  bool any_negative = false;
  for (const Term& term : terms_) {
    term.validate();
    (term.polarity == Polarity::positive ? any_positive : any_negative) = true;
  }
  if (any_negative && !any_positive) {
    throw ValidationError("negation needs at least one positive concept in the same composition");
  }
}

CompositionSpec CompositionSpec::single(const ConceptLabel& label, double weight) {
  return CompositionSpec({Term{label, Polarity::positive, weight}});
}

std::vector<Term> CompositionSpec::canonical_terms() const {
  std::vector<Term> sorted = terms_;
  std::stable_sort(sorted.begin(), sorted.end(), canonical_less);
  return sorted;
}

std::vector<ConceptLabel> CompositionSpec::distinct_labels() const {
  std::vector<ConceptLabel> labels;
  for (const Term& term : canonical_terms()) {
    if (labels.empty() || !(labels.back() == term.label)) labels.push_back(term.label);
  }
  return labels;
}

bool CompositionSpec::all_positive() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.polarity == Polarity::positive; });
}

namespace {

// Shared by conjunction and the general form so the two agree bit for bit.
Matrix signed_sum(const ScoreField& field, const Matrix& x, int t, std::vector<Term> terms) {
  std::stable_sort(terms.begin(), terms.end(), canonical_less);
  Matrix base = field.epsilon(x, t, ConceptLabel::null());
  Matrix out = base;
  std::size_t i = 0;
  while (i < terms.size()) {
    const ConceptLabel& label = terms[i].label;
    const Matrix diff = field.epsilon(x, t, label) - base;
    for (; i < terms.size() && terms[i].label == label; ++i) {
      out.noalias() += (terms[i].sign() * terms[i].weight) * diff;
    }
  }
  return out;
}

Vector first_row(const Matrix& m) { return m.row(0).transpose(); }

}  // namespace

Matrix conjunction_epsilon(const ScoreField& field, const Matrix& x, int t, std::span<const Term> terms) {
  for (const Term& term : terms) {
    term.validate();
    if (term.polarity != Polarity::positive) throw ValidationError("conjunction takes positive terms only");
  }
  return signed_sum(field, x, t, std::vector<Term>(terms.begin(), terms.end()));
}

Vector conjunction_epsilon(const ScoreField& field, const Vector& x, int t, std::span<const Term> terms) {
  return first_row(conjunction_epsilon(field, Matrix(x.transpose()), t, terms));
}

Matrix negation_epsilon(const ScoreField& field, const Matrix& x, int t, const Term& positive, const Term& negated) {
  positive.validate();
  negated.validate();
  if (positive.polarity != Polarity::positive) throw ValidationError("negation needs a positive concept");
  if (negated.weight != positive.weight) throw ValidationError("negation uses one weight shared by both terms");
  const double w = positive.weight;
  Matrix out = field.epsilon(x, t, ConceptLabel::null());
  if (positive.label == negated.label) return out;
  out.noalias() += w * (field.epsilon(x, t, positive.label) - field.epsilon(x, t, negated.label));
  return out;
}

Vector negation_epsilon(const ScoreField& field, const Vector& x, int t, const Term& positive, const Term& negated) {
  return first_row(negation_epsilon(field, Matrix(x.transpose()), t, positive, negated));
}

Matrix composed_epsilon(const ScoreField& field, const Matrix& x, int t, const CompositionSpec& spec) {
  return signed_sum(field, x, t, spec.terms());
}

Vector composed_epsilon(const ScoreField& field, const Vector& x, int t, const CompositionSpec& spec) {
  return first_row(composed_epsilon(field, Matrix(x.transpose()), t, spec));
}

Vector GaussianComposite::mean() const { return (natural_mean.array() / precision.array()).matrix(); }

Vector GaussianComposite::variance() const { return precision.cwiseInverse(); }

Matrix GaussianComposite::epsilon(const NoiseSchedule& sched, const Matrix& x) const {
  const double s = sched.marginal(t).noise_std;
  Matrix out = x;
  out.array().rowwise() *= precision.transpose().array();
  out.rowwise() -= natural_mean.transpose();
  return s * out;
}

namespace {

struct Natural {
  Vector precision;
  Vector natural_mean;
};

Natural natural_at(const GaussianConceptSpec& spec, double ab) {
  const double scale = std::sqrt(ab);
  Natural n;
  n.precision = (ab * spec.var.array() + (1.0 - ab)).inverse().matrix();
  n.natural_mean = (n.precision.array() * scale * spec.mean.array()).matrix();
  return n;
}

Natural combine(const AnalyticGaussianField& field, const CompositionSpec& spec, double ab) {
  const Natural base = natural_at(field.uncond(), ab);
  Natural out = base;
  for (const Term& term : spec.canonical_terms()) {
    const Natural c = natural_at(field.spec(term.label), ab);
    const double k = term.sign() * term.weight;
    out.precision += k * (c.precision - base.precision);
    out.natural_mean += k * (c.natural_mean - base.natural_mean);
  }
  return out;
}

}  // namespace

GaussianComposite analytic_composite(const AnalyticGaussianField& field, const CompositionSpec& spec, int t) {
  if (t < 1 || t > field.schedule().steps()) throw ValidationError("step out of range for analytic composite");
  Natural n = combine(field, spec, field.schedule().alpha_bar(t));
  GaussianComposite out;
  out.precision = std::move(n.precision);
  out.natural_mean = std::move(n.natural_mean);
  out.t = t;
  out.proper = (out.precision.array() > 0.0).all();
  return out;
}

std::optional<GaussianConceptSpec> data_composite(const AnalyticGaussianField& field, const CompositionSpec& spec) {
  const Natural n = combine(field, spec, 1.0);
  if (!(n.precision.array() > 0.0).all()) return std::nullopt;
  GaussianConceptSpec out;
  out.var = n.precision.cwiseInverse();
  out.mean = (n.natural_mean.array() * out.var.array()).matrix();
  return out;
}

}  // namespace compdiff
