// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compdiff/data.hpp"
#include "compdiff/model.hpp"
#include "compdiff/rng.hpp"
#include "compdiff/schedule.hpp"

namespace compdiff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW); 0 reduces to Adam
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& config);

struct TrainConfig {
  int steps = 20000;
  int batch_size = 128;
  AdamConfig adam;
  double label_dropout = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Draws t ~ U{1..T}, eps ~ N(0, I), forms x_t and replaces each label by
// the null label with probability `label_dropout`. Row draws happen in row
// order from `rng`.
DenoiserBatch make_denoising_batch(const Matrix& x0, std::span<const ConceptLabel> labels, const NoiseSchedule& sched,
                                   double label_dropout, Philox& rng);

struct DenoisingLoss {
  double loss = 0.0;
  std::vector<double> grad;
  std::size_t null_labels = 0;
};

DenoisingLoss denoising_loss(const DenoiserNet& net, const Matrix& x0, std::span<const ConceptLabel> labels,
                             const NoiseSchedule& sched, double label_dropout, Philox& rng);

struct TrainResult {
  DenoiserNet net;
  std::vector<double> losses;  // one per step
  std::int64_t labels_seen = 0;
  std::int64_t null_labels_seen = 0;
};

using TrainProgress = std::function<void(int step, double loss)>;

// Pure function of (initial net, data, schedule, config). Throws
// RuntimeFailure if the loss or any parameter becomes non-finite.
TrainResult train_loop(DenoiserNet net, const Dataset& data, const NoiseSchedule& sched, const TrainConfig& config,
                       const TrainProgress& progress = {});

// Mean loss over the last 10% of steps is below the mean over the first 1%.
bool training_signal_ok(std::span<const double> losses);
// Trailing-window mean, used for reporting smoothed losses.
double mean_of_range(std::span<const double> values, std::size_t first, std::size_t last);

std::string loss_curve_csv(std::span<const double> losses);

}  // namespace compdiff
