// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compdiff/compose.hpp"
#include "compdiff/data.hpp"
#include "compdiff/linalg.hpp"
#include "compdiff/scorefield.hpp"

namespace compdiff {

enum class VerifierKind { analytic, learned };
VerifierKind parse_verifier_kind(std::string_view text);
std::string to_string(VerifierKind kind);

// A point satisfies concept c when c's posterior responsibility under equal
// priors exceeds 0.5.
struct PointsRule {
  std::vector<PointConcept> concepts;
};

// A scene satisfies Coord(x, y) when some pixel whose centre lies within
// `radius_cells` of (x, y) has intensity (value + 1) / 2 >= `threshold`.
struct BlobsRule {
  BlobsConfig geometry;
  double radius_cells = 1.5;
  double threshold = 0.5;
};

struct LogisticModel {
  Vector weights;
  double bias = 0.0;

  double probability(const Vector& features) const;
};

// One-vs-rest classifiers on raw coordinates, indexed like `ids`.
struct LearnedPoints {
  std::vector<int> ids;
  std::vector<LogisticModel> models;
};

// A single classifier shared by all positions. Its features are the
// (2 * half_window + 1)^2 pixels around the cell nearest to the queried
// coordinate, with -1 (background) outside the image.
struct LearnedBlobs {
  BlobsConfig geometry;
  int half_window = 2;
  LogisticModel model;
};

struct ConceptVerifier {
  VerifierKind kind = VerifierKind::analytic;
  DatasetKind dataset = DatasetKind::points2d;
  std::variant<PointsRule, BlobsRule, LearnedPoints, LearnedBlobs> rule;
  double heldout_accuracy = 1.0;  // learned only

  static ConceptVerifier analytic_points(std::vector<PointConcept> concepts);
  static ConceptVerifier analytic_blobs(const BlobsConfig& geometry, double radius_cells = 1.5, double threshold = 0.5);
  void validate() const;
};

bool concept_satisfied(const RowVector& sample, const ConceptLabel& label, const ConceptVerifier& verifier);

struct AccuracyReport {
  double accuracy = 0.0;
  std::vector<double> per_term;  // satisfaction rate of each term, in term order
  std::int64_t n = 0;
};

// Fraction of rows meeting every term: positive terms satisfied, negative
// terms not satisfied.
AccuracyReport accuracy_report(const Matrix& samples, std::span<const Term> terms, const ConceptVerifier& verifier);
double accuracy(const Matrix& samples, std::span<const Term> terms, const ConceptVerifier& verifier);

enum class EnergyEstimator { unbiased, plugin };

// 2 E|a - b| - E|a - a'| - E|b - b'|. The unbiased form averages the
// within-set terms over distinct pairs; the plug-in form includes the
// zero diagonal, so identical sets give exactly 0.
double energy_distance(const Matrix& a, const Matrix& b, EnergyEstimator estimator = EnergyEstimator::unbiased);

// sqrt(mean over probes of |eps_field - eps_oracle|^2).
double field_rmse(const ScoreField& field, const ScoreField& oracle, const Matrix& probes, int t,
                  const ConceptLabel& label = ConceptLabel::null());

// Regular nx x ny grid over [lo, hi] per axis, one probe per row.
Matrix probe_grid(const Vector& lo, const Vector& hi, int per_axis);

struct ClassifierOptions {
  double ridge = 1e-4;
  int max_iterations = 100;
  double tolerance = 1e-10;
  double min_accuracy = 0.95;
};

// Seeded 80/20 split; Newton iterations on the ridge-penalised logistic
// loss. Throws RuntimeFailure if held-out accuracy is below min_accuracy.
// points2d: one classifier per concept id (that concept vs the rest).
// blobs: positives are labelled coordinates, negatives are uniformly drawn
// coordinates at least 3 blob std away from every object of the scene.
ConceptVerifier train_binary_classifier(const Dataset& data, std::uint64_t seed, const ClassifierOptions& opts = {},
                                        const BlobsConfig& geometry = {});

// Fits one logistic model; features one example per row, labels 0/1.
LogisticModel fit_logistic(const Matrix& features, const std::vector<int>& labels, const ClassifierOptions& opts);

struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> energy_distance;
  std::int64_t n = 0;
  std::string verifier_kind;
  std::vector<double> per_concept_satisfaction;

  std::string to_json() const;
};

}  // namespace compdiff
