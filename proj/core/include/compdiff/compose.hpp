// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compdiff/label.hpp"
#include "compdiff/linalg.hpp"
#include "compdiff/scorefield.hpp"

namespace compdiff {

enum class Polarity { positive, negative };

struct Term {
  ConceptLabel label;
  Polarity polarity = Polarity::positive;
  double weight = 1.0;

  double sign() const { return polarity == Polarity::positive ? 1.0 : -1.0; }
  void validate() const;
  bool operator==(const Term&) const = default;
};

// Sort key used before summation: label, then polarity, then weight.
bool canonical_less(const Term& a, const Term& b);

/// Non-empty list of guidance terms; a negative term needs at least one
/// positive term next to it. Construction validates.
class CompositionSpec {
 public:
  explicit CompositionSpec(std::vector<Term> terms);
  static CompositionSpec single(const ConceptLabel& label, double weight = 1.0);

  const std::vector<Term>& terms() const { return terms_; }
  std::vector<Term> canonical_terms() const;
  // Distinct labels in canonical order.
  std::vector<ConceptLabel> distinct_labels() const;
  bool all_positive() const;

  bool operator==(const CompositionSpec&) const = default;

 private:
  std::vector<Term> terms_;
};

// eps(Null) + sum_i w_i (eps(c_i) - eps(Null)). Terms must be positive.
Matrix conjunction_epsilon(const ScoreField& field, const Matrix& x, int t, std::span<const Term> terms);
Vector conjunction_epsilon(const ScoreField& field, const Vector& x, int t, std::span<const Term> terms);

// eps(Null) + w (eps(c_i) - eps(c_j)); both terms must carry the same weight w.
Matrix negation_epsilon(const ScoreField& field, const Matrix& x, int t, const Term& positive, const Term& negated);
Vector negation_epsilon(const ScoreField& field, const Vector& x, int t, const Term& positive, const Term& negated);

// eps(Null) + sum_k s_k w_k (eps(c_k) - eps(Null)) in canonical term order.
// Each distinct label is evaluated once, plus one null evaluation.
Matrix composed_epsilon(const ScoreField& field, const Matrix& x, int t, const CompositionSpec& spec);
Vector composed_epsilon(const ScoreField& field, const Vector& x, int t, const CompositionSpec& spec);

/// Closed form of a composition over Gaussian concepts at one step.
///
/// Per axis the diffused natural parameters combine as
/// P* = P0 + sum s w (Pk - P0), h* = h0 + sum s w (hk - h0), where
/// Pk = 1 / (ab var_k + 1 - ab) and hk = Pk sqrt(ab) mean_k, and
/// eps = sqrt(1 - ab) (P* x - h*). `proper` is false when some P* <= 0.
struct GaussianComposite {
  Vector precision;
  Vector natural_mean;
  int t = 0;
  bool proper = true;

  Vector mean() const;
  Vector variance() const;
  Matrix epsilon(const NoiseSchedule& sched, const Matrix& x) const;
};

GaussianComposite analytic_composite(const AnalyticGaussianField& field, const CompositionSpec& spec, int t);

// The same combination applied to the undiffused concepts; this is the
// product density the composition is meant to sample. nullopt if improper.
std::optional<GaussianConceptSpec> data_composite(const AnalyticGaussianField& field, const CompositionSpec& spec);

// Maps a label token ("c1", "3", ...) to a concept; nullopt if unknown.
// Coordinate labels ("@x,y") are handled by the parser itself.
using LabelResolver = std::function<std::optional<ConceptLabel>(std::string_view)>;

// spec := term ("," term)* ; term := ["~"] label [":" weight]
// A label is a name for the resolver or "@" followed by exactly coord_dim
// comma-separated numbers. Whitespace around tokens is ignored. Throws
// ParseError (with byte offset) on syntax errors, unknown labels and
// negative weights, ValidationError on specs that break the term rules.
CompositionSpec parse_compose_spec(std::string_view text, const LabelResolver& resolve, int coord_dim = 2);

// Inverse of parse_compose_spec given a label printer.
std::string format_compose_spec(const CompositionSpec& spec,
                                const std::function<std::string(const ConceptLabel&)>& name);

}  // namespace compdiff
