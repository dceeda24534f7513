// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/train.hpp"

#include <algorithm>
#include <cmath>

#include "compdiff/errors.hpp"
#include "compdiff/io.hpp"

namespace compdiff {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ValidationError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * params[i]);
  }
}

void TrainConfig::validate() const {
  if (steps < 0) throw ValidationError("train steps must be nonnegative");
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (!(label_dropout >= 0.0 && label_dropout <= 1.0)) throw ValidationError("label_dropout must lie in [0, 1]");
  if (!(adam.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0) || !(adam.weight_decay >= 0.0)) throw ValidationError("invalid Adam epsilon/weight decay");
}

DenoiserBatch make_denoising_batch(const Matrix& x0, std::span<const ConceptLabel> labels, const NoiseSchedule& sched,
                                   double label_dropout, Philox& rng) {
  if (x0.rows() == 0) throw ValidationError("denoising loss needs a nonempty batch");
  if (static_cast<std::size_t>(x0.rows()) != labels.size()) throw ValidationError("batch labels and rows disagree");
  DenoiserBatch batch;
  batch.x.resize(x0.rows(), x0.cols());
  batch.target.resize(x0.rows(), x0.cols());
  batch.t.resize(labels.size());
  batch.labels.reserve(labels.size());
  for (Eigen::Index r = 0; r < x0.rows(); ++r) {
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
    const auto [scale, noise_std] = sched.marginal(t);
    for (Eigen::Index k = 0; k < x0.cols(); ++k) {
      const double eps = rng.normal();
      batch.target(r, k) = eps;
      batch.x(r, k) = scale * x0(r, k) + noise_std * eps;
    }
    batch.t[static_cast<std::size_t>(r)] = t;
    const bool drop = rng.uniform() < label_dropout;
    batch.labels.push_back(drop ? ConceptLabel::null() : labels[static_cast<std::size_t>(r)]);
  }
  return batch;
}

DenoisingLoss denoising_loss(const DenoiserNet& net, const Matrix& x0, std::span<const ConceptLabel> labels,
                             const NoiseSchedule& sched, double label_dropout, Philox& rng) {
  const DenoiserBatch batch = make_denoising_batch(x0, labels, sched, label_dropout, rng);
  auto lg = net.backward(batch);
  DenoisingLoss out{lg.loss, std::move(lg.grad), 0};
  out.null_labels = static_cast<std::size_t>(
      std::count_if(batch.labels.begin(), batch.labels.end(), [](const ConceptLabel& l) { return l.is_null(); }));
  return out;
}

TrainResult train_loop(DenoiserNet net, const Dataset& data, const NoiseSchedule& sched, const TrainConfig& config,
                       const TrainProgress& progress) {
  config.validate();
  if (data.size() == 0) throw ValidationError("training needs a nonempty dataset");
  if (data.dim() != net.config().data_dim) throw ValidationError("dataset dimension does not match the network");
  const auto batch_size = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), data.size());

  TrainResult result{std::move(net), {}, 0, 0};
  result.losses.reserve(static_cast<std::size_t>(config.steps));
  AdamState state(result.net.param_count());

  std::vector<std::vector<std::size_t>> epoch;
  std::size_t next_batch = 0;
  std::uint64_t epoch_index = 0;
  Matrix probe = Matrix::Constant(2, result.net.config().data_dim, 10.0);
  probe.row(1) *= -1.0;

  for (int step = 0; step < config.steps; ++step) {
    if (next_batch == epoch.size()) {
      epoch = minibatches(data.size(), batch_size, derive_stream(config.seed, derive_stream(streams::kEpoch, epoch_index++)));
      next_batch = 0;
    }
    const auto& rows = epoch[next_batch++];
    Matrix x0(static_cast<Eigen::Index>(rows.size()), data.dim());
    std::vector<ConceptLabel> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x0.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(rows[i]));
      labels.push_back(data.labels[rows[i]]);
    }

    Philox rng(config.seed, derive_stream(streams::kTrainStep, static_cast<std::uint64_t>(step)));
    auto loss = denoising_loss(result.net, x0, labels, sched, config.label_dropout, rng);
    if (!std::isfinite(loss.loss)) {
      throw RuntimeFailure("training diverged at step " + std::to_string(step) + ": loss is " + format_double(loss.loss) +
                           " (try a lower learning rate)");
    }
    adam_step(result.net.params(), loss.grad, state, config.adam);
    result.losses.push_back(loss.loss);
    result.labels_seen += static_cast<std::int64_t>(rows.size());
    result.null_labels_seen += static_cast<std::int64_t>(loss.null_labels);

    if ((step + 1) % 100 == 0 || step + 1 == config.steps) {
      if (!result.net.all_finite()) throw RuntimeFailure("non-finite parameter after step " + std::to_string(step));
      for (int t : {1, sched.steps()}) {
        if (!result.net.forward(probe, t, ConceptLabel::null()).allFinite()) {
          throw RuntimeFailure("network output non-finite on |x| = 10 probe after step " + std::to_string(step));
        }
      }
      if (progress) progress(step + 1, loss.loss);
    }
  }
  return result;
}

double mean_of_range(std::span<const double> values, std::size_t first, std::size_t last) {
  if (first >= last || last > values.size()) throw ValidationError("mean_of_range: empty or invalid range");
  double acc = 0.0;
  for (std::size_t i = first; i < last; ++i) acc += values[i];
  return acc / static_cast<double>(last - first);
}

bool training_signal_ok(std::span<const double> losses) {
  const std::size_t n = losses.size();
  if (n < 2) return true;
  const std::size_t head = std::max<std::size_t>(1, n / 100);
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  return mean_of_range(losses, n - tail, n) < mean_of_range(losses, 0, head);
}

std::string loss_curve_csv(std::span<const double> losses) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i + 1) + "," + format_double(losses[i]) + "\n";
  return out;
}

}  // namespace compdiff
