// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "commands.hpp"
#include "compdiff/compose.hpp"
#include "compdiff/errors.hpp"
#include "compdiff/eval.hpp"
#include "compdiff/grid_oracle.hpp"
#include "compdiff/rng.hpp"

namespace compdiff::cli {
namespace {

constexpr int kRandomPoints = 200;
constexpr int kRandomSpecs = 100;

Matrix random_points(Philox& rng, int n, int d, double scale) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = scale * rng.normal();
  }
  return x;
}

double max_abs(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

std::vector<int> probe_steps(int T) {
  std::vector<int> steps{1, T / 4, T / 2, 3 * T / 4, T};
  for (int& t : steps) t = std::clamp(t, 1, T);
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

// 5x5 probes spanning mean +- 2 std.
Matrix concept_probes(const GaussianConceptSpec& spec) {
  const Vector sd = spec.var.cwiseSqrt();
  return probe_grid(spec.mean - 2.0 * sd, spec.mean + 2.0 * sd, 5);
}

}  // namespace

std::vector<OracleCheck> run_oracle_checks(const ExperimentConfig& config) {
  if (config.field != FieldKind::analytic) throw ValidationError("oracle-check needs an analytic [field]");
  const AnalyticGaussianField field = config.analytic_field();
  const NoiseSchedule& sched = field.schedule();
  const int T = sched.steps();
  const int d = field.dim();
  std::vector<OracleCheck> checks;
  auto add = [&](std::string name, double value, double tol) {
    checks.push_back({std::move(name), value, tol, value <= tol});
  };

  std::vector<std::pair<std::string, ConceptLabel>> labels{{"null", ConceptLabel::null()}};
  for (const auto& e : config.concepts) labels.emplace_back(e.name, ConceptLabel::discrete(e.id));

  if (d == 2) {
    for (const auto& [name, label] : labels) {
      const GaussianConceptSpec& spec = field.spec(label);
      const GridOracleField oracle(sched, grid_around(spec, config.oracle_extent_std, config.oracle_nodes),
                                   gaussian_density(spec));
      const Matrix probes = concept_probes(spec);
      double worst = 0.0;
      for (int t : probe_steps(T)) {
        const Matrix diff = field.epsilon(probes, t, label) - oracle.epsilon(probes, t, ConceptLabel::null());
        worst = std::max(worst, std::sqrt(diff.rowwise().squaredNorm().mean()));
      }
      add("grid oracle rms [" + name + "]", worst, 1e-3);
    }
  }

  if (config.concepts.empty()) return checks;
  Philox rng(0, streams::kInit);
  const Matrix x = random_points(rng, kRandomPoints, d, 2.0);
  std::vector<ConceptLabel> concepts;
  for (std::size_t i = 1; i < labels.size(); ++i) concepts.push_back(labels[i].second);

  double single = 0.0;
  double zero = 0.0;
  double negation = 0.0;
  double permutation = 0.0;
  double linearity = 0.0;
  for (int t : probe_steps(T)) {
    const Matrix base = field.epsilon(x, t, ConceptLabel::null());
    std::vector<Term> zeros;
    for (const auto& c : concepts) {
      single = std::max(single, max_abs(composed_epsilon(field, x, t, CompositionSpec::single(c)), field.epsilon(x, t, c)));
      zeros.push_back({c, Polarity::positive, 0.0});
      const Matrix one = composed_epsilon(field, x, t, CompositionSpec::single(c, 0.75)) - base;
      const Matrix two = composed_epsilon(field, x, t, CompositionSpec::single(c, 1.5)) - base;
      linearity = std::max(linearity, max_abs(two, 2.0 * one));
    }
    zero = std::max(zero, max_abs(composed_epsilon(field, x, t, CompositionSpec(zeros)), base));
    for (const auto& ci : concepts) {
      for (const auto& cj : concepts) {
        const Term pos{ci, Polarity::positive, 1.5};
        const Term neg{cj, Polarity::negative, 1.5};
        negation = std::max(negation, max_abs(negation_epsilon(field, x, t, pos, neg),
                                              composed_epsilon(field, x, t, CompositionSpec({pos, neg}))));
      }
    }
    std::vector<Term> terms;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
      terms.push_back({concepts[i], Polarity::positive, 0.5 + 0.25 * static_cast<double>(i)});
    }
    if (concepts.size() > 1) terms.push_back({concepts[0], Polarity::negative, 0.3});
    const Matrix forward = composed_epsilon(field, x, t, CompositionSpec(terms));
    std::reverse(terms.begin(), terms.end());
    permutation = std::max(permutation, max_abs(forward, composed_epsilon(field, x, t, CompositionSpec(terms))));
  }
  add("single term equals conditional", single, 1e-12);
  add("zero weights equal unconditional", zero, 0.0);
  add("negation equals signed sum", negation, 1e-12);
  add("permutation invariance", permutation, 0.0);
  add("linearity in weights", linearity, 1e-12);

  double closure = 0.0;
  int proper = 0;
  long count_error = 0;
  CountingField counter(field);
  for (int k = 0; k < kRandomSpecs; ++k) {
    std::vector<Term> terms;
    const int size = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < size; ++i) {
      const ConceptLabel& c = concepts[rng.below(concepts.size())];
      const Polarity pol = (i == 0 || rng.uniform() < 0.6) ? Polarity::positive : Polarity::negative;
      terms.push_back({c, pol, 2.0 * rng.uniform()});
    }
    const CompositionSpec spec(terms);
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
    counter.reset();
    const Matrix eps = composed_epsilon(counter, x, t, spec);
    count_error = std::max(count_error, std::labs(counter.calls() - static_cast<long>(spec.distinct_labels().size() + 1)));
    const GaussianComposite g = analytic_composite(field, spec, t);
    if (!g.proper) continue;
    ++proper;
    const Matrix ref = g.epsilon(sched, x);
    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
    closure = std::max(closure, max_abs(eps, ref) / scale);
  }
  add("analytic closure (" + std::to_string(proper) + " proper specs)", closure, 1e-9);
  add("field evaluations = distinct labels + 1", static_cast<double>(count_error), 0.0);
  return checks;
}

std::string format_oracle_table(const std::vector<OracleCheck>& checks) {
  std::size_t width = 5;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  std::ostringstream os;
  char buf[128];
  os << std::string(width, ' ').replace(0, 5, "check") << "  " << "   value    " << "  tolerance  " << "result\n";
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "  %11.4e  %11.4e  %s\n", c.value, c.tolerance, c.pass ? "PASS" : "FAIL");
    os << c.name << std::string(width - c.name.size(), ' ') << buf;
  }
  return os.str();
}

}  // namespace compdiff::cli
