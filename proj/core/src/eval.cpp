// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "compdiff/errors.hpp"
#include "compdiff/rng.hpp"

namespace compdiff {

VerifierKind parse_verifier_kind(std::string_view text) {
  if (text == "analytic") return VerifierKind::analytic;
  if (text == "learned") return VerifierKind::learned;
  throw ValidationError("unknown verifier kind '" + std::string(text) + "' (expected analytic or learned)");
}

std::string to_string(VerifierKind kind) { return kind == VerifierKind::analytic ? "analytic" : "learned"; }

double LogisticModel::probability(const Vector& features) const {
  const double z = weights.dot(features) + bias;
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

ConceptVerifier ConceptVerifier::analytic_points(std::vector<PointConcept> concepts) {
  ConceptVerifier v;
  v.kind = VerifierKind::analytic;
  v.dataset = DatasetKind::points2d;
  v.rule = PointsRule{std::move(concepts)};
  v.validate();
  return v;
}

ConceptVerifier ConceptVerifier::analytic_blobs(const BlobsConfig& geometry, double radius_cells, double threshold) {
  ConceptVerifier v;
  v.kind = VerifierKind::analytic;
  v.dataset = DatasetKind::blobs;
  v.rule = BlobsRule{geometry, radius_cells, threshold};
  v.validate();
  return v;
}

void ConceptVerifier::validate() const {
  if (const auto* p = std::get_if<PointsRule>(&rule)) {
    if (p->concepts.empty()) throw ValidationError("points verifier needs at least one concept");
    for (const auto& c : p->concepts) c.spec.validate();
  } else if (const auto* b = std::get_if<BlobsRule>(&rule)) {
    if (!(b->radius_cells >= 0.0)) throw ValidationError("detection radius must be nonnegative");
    if (!std::isfinite(b->threshold)) throw ValidationError("detection threshold must be finite");
  } else if (const auto* lp = std::get_if<LearnedPoints>(&rule)) {
    if (lp->ids.size() != lp->models.size() || lp->ids.empty()) throw ValidationError("malformed learned verifier");
  } else if (const auto* lb = std::get_if<LearnedBlobs>(&rule)) {
    if (lb->half_window < 0) throw ValidationError("malformed learned verifier");
  }
  const bool learned = std::holds_alternative<LearnedPoints>(rule) || std::holds_alternative<LearnedBlobs>(rule);
  if (learned != (kind == VerifierKind::learned)) throw ValidationError("verifier kind does not match its rule");
  if (kind == VerifierKind::learned && !(heldout_accuracy >= 0.95)) {
    throw ValidationError("learned verifier below the 0.95 held-out accuracy bar");
  }
}

namespace {

double log_gaussian(const GaussianConceptSpec& spec, const RowVector& x) {
  double out = 0.0;
  for (int j = 0; j < spec.dim(); ++j) {
    const double d = x[j] - spec.mean[j];
    out -= 0.5 * (d * d / spec.var[j] + std::log(2.0 * std::numbers::pi * spec.var[j]));
  }
  return out;
}

int nearest_cell(double v, int cells) {
  const int i = static_cast<int>(std::lround((v + 1.0) * cells / 2.0));
  return std::clamp(i, 0, cells - 1);
}

Vector patch_features(const RowVector& sample, double cx, double cy, const BlobsConfig& g, int half) {
  const int side = 2 * half + 1;
  Vector f(side * side);
  const int c0 = nearest_cell(cx, g.width);
  const int r0 = nearest_cell(cy, g.height);
  int k = 0;
  for (int dr = -half; dr <= half; ++dr) {
    for (int dc = -half; dc <= half; ++dc) {
      const int r = r0 + dr;
      const int c = c0 + dc;
      f[k++] = (r < 0 || c < 0 || r >= g.height || c >= g.width) ? -1.0 : sample[r * g.width + c];
    }
  }
  return f;
}

bool points_satisfied(const RowVector& x, int id, const PointsRule& rule) {
  std::vector<double> logs;
  double own = 0.0;
  bool found = false;
  for (const auto& c : rule.concepts) {
    logs.push_back(log_gaussian(c.spec, x));
    if (c.id == id) {
      own = logs.back();
      found = true;
    }
  }
  if (!found) throw ValidationError("verifier has no concept #" + std::to_string(id));
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double l : logs) total += std::exp(l - top);
  return std::exp(own - top) / total > 0.5;
}

bool blobs_satisfied(const RowVector& x, const std::vector<double>& at, const BlobsRule& rule) {
  const auto& g = rule.geometry;
  for (int r = 0; r < g.height; ++r) {
    const double dy = (cell_center(r, g.height) - at[1]) * g.height / 2.0;
    for (int c = 0; c < g.width; ++c) {
      const double dx = (cell_center(c, g.width) - at[0]) * g.width / 2.0;
      if (std::hypot(dx, dy) > rule.radius_cells) continue;
      if ((x[r * g.width + c] + 1.0) / 2.0 >= rule.threshold) return true;
    }
  }
  return false;
}

}  // namespace

bool concept_satisfied(const RowVector& sample, const ConceptLabel& label, const ConceptVerifier& verifier) {
  if (verifier.dataset == DatasetKind::points2d) {
    if (!label.is_discrete()) throw ValidationError("points2d verifier expects a discrete label");
    if (sample.size() != 2) throw ValidationError("points2d verifier expects 2-D samples");
  } else {
    if (!label.is_coord() || label.coords().size() != 2) {
      throw ValidationError("blobs verifier expects a 2-D coordinate label");
    }
  }
  if (const auto* p = std::get_if<PointsRule>(&verifier.rule)) return points_satisfied(sample, label.id(), *p);
  if (const auto* b = std::get_if<BlobsRule>(&verifier.rule)) {
    if (sample.size() != b->geometry.height * b->geometry.width) throw ValidationError("blob sample size mismatch");
    return blobs_satisfied(sample, label.coords(), *b);
  }
  if (const auto* lp = std::get_if<LearnedPoints>(&verifier.rule)) {
    const auto it = std::find(lp->ids.begin(), lp->ids.end(), label.id());
    if (it == lp->ids.end()) throw ValidationError("verifier has no label " + label.str());
    return lp->models[static_cast<std::size_t>(it - lp->ids.begin())].probability(sample.transpose()) >= 0.5;
  }
  const auto& lb = std::get<LearnedBlobs>(verifier.rule);
  if (sample.size() != lb.geometry.height * lb.geometry.width) throw ValidationError("blob sample size mismatch");
  const auto& at = label.coords();
  return lb.model.probability(patch_features(sample, at[0], at[1], lb.geometry, lb.half_window)) >= 0.5;
}

AccuracyReport accuracy_report(const Matrix& samples, std::span<const Term> terms, const ConceptVerifier& verifier) {
  if (samples.rows() == 0) throw ValidationError("accuracy needs a nonempty batch");
  if (terms.empty()) throw ValidationError("accuracy needs at least one concept");
  AccuracyReport report;
  report.n = samples.rows();
  report.per_term.assign(terms.size(), 0.0);
  std::int64_t hits = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const RowVector row = samples.row(i);
    bool all = true;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const bool sat = concept_satisfied(row, terms[k].label, verifier);
      if (sat) report.per_term[k] += 1.0;
      if (sat != (terms[k].polarity == Polarity::positive)) all = false;
    }
    if (all) ++hits;
  }
  for (double& v : report.per_term) v /= static_cast<double>(report.n);
  report.accuracy = static_cast<double>(hits) / static_cast<double>(report.n);
  return report;
}

double accuracy(const Matrix& samples, std::span<const Term> terms, const ConceptVerifier& verifier) {
  return accuracy_report(samples, terms, verifier).accuracy;
}

namespace {

double pair_sum(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  const Eigen::Index d = a.cols();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double* pa = a.row(i).data();
    double row_total = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double* pb = b.row(j).data();
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = pa[k] - pb[k];
        s += diff * diff;
      }
      row_total += std::sqrt(s);
    }
    total += row_total;
  }
  return total;
}

}  // namespace

double energy_distance(const Matrix& a, const Matrix& b, EnergyEstimator estimator) {
  if (a.rows() < 2 || b.rows() < 2) throw ValidationError("energy distance needs at least two points per set");
  if (a.cols() != b.cols()) throw ValidationError("energy distance sets differ in dimension");
  const double na = static_cast<double>(a.rows());
  const double nb = static_cast<double>(b.rows());
  // Computing the cross term as the mean of both orientations keeps the
  // estimate exactly symmetric.
  const double cross = 0.5 * (pair_sum(a, b) + pair_sum(b, a)) / (na * nb);
  const double wa = pair_sum(a, a);
  const double wb = pair_sum(b, b);
  if (estimator == EnergyEstimator::plugin) return 2.0 * cross - wa / (na * na) - wb / (nb * nb);
  return 2.0 * cross - wa / (na * (na - 1.0)) - wb / (nb * (nb - 1.0));
}

double field_rmse(const ScoreField& field, const ScoreField& oracle, const Matrix& probes, int t,
                  const ConceptLabel& label) {
  if (field.dim() != oracle.dim()) throw ValidationError("field and oracle differ in dimension");
  if (probes.rows() == 0) throw ValidationError("field_rmse needs at least one probe");
  const Matrix diff = field.epsilon(probes, t, label) - oracle.epsilon(probes, t, label);
  return std::sqrt(diff.rowwise().squaredNorm().mean());
}

Matrix probe_grid(const Vector& lo, const Vector& hi, int per_axis) {
  if (lo.size() != 2 || hi.size() != 2) throw ValidationError("probe grids are 2-D");
  if (per_axis < 2) throw ValidationError("probe grid needs at least 2 points per axis");
  Matrix out(per_axis * per_axis, 2);
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      out(i * per_axis + j, 0) = lo[0] + (hi[0] - lo[0]) * i / (per_axis - 1);
      out(i * per_axis + j, 1) = lo[1] + (hi[1] - lo[1]) * j / (per_axis - 1);
    }
  }
  return out;
}

LogisticModel fit_logistic(const Matrix& features, const std::vector<int>& labels, const ClassifierOptions& opts) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw ValidationError("logistic fit shape mismatch");
  // Augmented design [X | 1]; the intercept is not penalised.
  Matrix design(n, p + 1);
  design.leftCols(p) = features;
  design.col(p).setOnes();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  Vector penalty = Vector::Constant(p + 1, opts.ridge * static_cast<double>(n));
  penalty[p] = 0.0;

  Vector beta = Vector::Zero(p + 1);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vector z = design * beta;
    Vector mu(n);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = z[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-z[i])) : std::exp(z[i]) / (1.0 + std::exp(z[i]));
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    const Vector grad = design.transpose() * (mu - y) + penalty.cwiseProduct(beta);
    Matrix hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += penalty + Vector::Constant(p + 1, 1e-10);
    const Vector step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.norm() < opts.tolerance * (1.0 + beta.norm())) break;
  }
  if (!beta.allFinite()) throw RuntimeFailure("logistic regression diverged");
  LogisticModel model;
  model.weights = beta.head(p);
  model.bias = beta[p];
  return model;
}

namespace {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split split_80_20(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Philox rng(seed, streams::kSplit);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t cut = n - n / 5;
  return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut)),
          std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end())};
}

double holdout(const LogisticModel& m, const Matrix& f, const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  std::size_t ok = 0;
  for (std::size_t r : rows) {
    const bool pred = m.probability(f.row(static_cast<Eigen::Index>(r)).transpose()) >= 0.5;
    if (pred == (y[r] != 0)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

Matrix take(const Matrix& f, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), f.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = f.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> take(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

ConceptVerifier train_binary_classifier(const Dataset& data, std::uint64_t seed, const ClassifierOptions& opts,
                                        const BlobsConfig& geometry) {
  if (data.size() < 10) throw ValidationError("dataset too small to train a verifier");
  ConceptVerifier v;
  v.kind = VerifierKind::learned;
  v.dataset = data.kind;

  if (data.kind == DatasetKind::points2d) {
    std::vector<int> ids;
    for (const auto& l : data.labels) ids.push_back(l.id());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) throw ValidationError("a learned verifier needs at least two concepts");
    const Split split = split_80_20(data.size(), seed);
    const Matrix train_x = take(data.x, split.train);
    LearnedPoints rule;
    double worst = 1.0;
    for (int id : ids) {
      std::vector<int> y;
      for (const auto& l : data.labels) y.push_back(l.id() == id ? 1 : 0);
      LogisticModel m = fit_logistic(train_x, take(y, split.train), opts);
      worst = std::min(worst, holdout(m, data.x, y, split.test));
      rule.ids.push_back(id);
      rule.models.push_back(std::move(m));
    }
    v.rule = std::move(rule);
    v.heldout_accuracy = worst;
  } else {
    if (data.objects.size() != data.size()) throw ValidationError("blob dataset lacks object positions");
    if (geometry.height * geometry.width != data.dim()) throw ValidationError("blob geometry does not match data");
    LearnedBlobs rule;
    rule.geometry = geometry;
    const int side = 2 * rule.half_window + 1;
    Matrix f(static_cast<Eigen::Index>(2 * data.size()), side * side);
    std::vector<int> y(2 * data.size());
    Philox rng(seed, derive_stream(streams::kSplit, 1));
    const double clear = 3.0 * geometry.blob_std;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const RowVector row = data.x.row(static_cast<Eigen::Index>(i));
      const auto& at = data.labels[i].coords();
      f.row(static_cast<Eigen::Index>(2 * i)) = patch_features(row, at[0], at[1], geometry, rule.half_window).transpose();
      y[2 * i] = 1;
      Position q{};
      for (int tries = 0;; ++tries) {
        q = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
        const bool far = std::all_of(data.objects[i].begin(), data.objects[i].end(), [&](const Position& o) {
          return std::hypot((q[0] - o[0]) * geometry.width / 2.0, (q[1] - o[1]) * geometry.height / 2.0) >= clear;
        });
        if (far) break;
        if (tries > 1000) throw RuntimeFailure("cannot draw a negative position for blob scene " + std::to_string(i));
      }
      f.row(static_cast<Eigen::Index>(2 * i + 1)) = patch_features(row, q[0], q[1], geometry, rule.half_window).transpose();
      y[2 * i + 1] = 0;
    }
    const Split split = split_80_20(y.size(), seed);
    rule.model = fit_logistic(take(f, split.train), take(y, split.train), opts);
    v.heldout_accuracy = holdout(rule.model, f, y, split.test);
    v.rule = std::move(rule);
  }
  if (v.heldout_accuracy < opts.min_accuracy) {
    throw RuntimeFailure("learned verifier held-out accuracy " + std::to_string(v.heldout_accuracy) + " is below " +
                         std::to_string(opts.min_accuracy));
  }
  return v;
}

std::string Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy ? nlohmann::ordered_json(*accuracy) : nlohmann::ordered_json(nullptr);
  j["energy_distance"] = energy_distance ? nlohmann::ordered_json(*energy_distance) : nlohmann::ordered_json(nullptr);
  j["n"] = n;
  j["verifier_kind"] = verifier_kind;
  j["per_concept_satisfaction"] = per_concept_satisfaction;
  return j.dump(2) + "\n";
}

}  // namespace compdiff
