// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compdiff/label.hpp"
#include "compdiff/linalg.hpp"
#include "compdiff/scorefield.hpp"

namespace compdiff {

struct DenoiserConfig {
  int data_dim = 2;
  std::vector<int> hidden_widths{128, 128};
  int time_embed_dim = 32;
  int label_embed_dim = 64;
  // Exactly one of the two conditioning paths is active.
  int num_discrete_concepts = 0;
  int coord_dim = 0;

  void validate() const;
  int input_dim() const { return data_dim + time_embed_dim + label_embed_dim; }
  bool operator==(const DenoiserConfig&) const = default;
};

// Sinusoidal features: pairs (sin(t w_k), cos(t w_k)) with w_k spaced
// geometrically from 1 down to 1e-4. dim must be even.
Vector embed_time(double t, int dim);

struct ParamBlock {
  std::string name;
  int rows;
  int cols;
  std::size_t offset;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// One training/evaluation row set: inputs x_t, per-row steps and labels.
struct DenoiserBatch {
  Matrix x;
  std::vector<int> t;
  std::vector<ConceptLabel> labels;
  Matrix target;  // noise to predict; used by backward only
};

struct LossGradient {
  double loss = 0.0;            // mean over rows of |prediction - target|^2
  std::vector<double> grad;     // same layout as DenoiserNet::params()
};

/// Fully connected eps-predictor.
///
/// Input is [x_t | time features | label embedding], hidden units use
/// x * sigmoid(x), output is linear in R^data_dim. All parameters live in
/// one flat vector; blocks() names the slices:
///   layer{i}.weight (out x in, row-major), layer{i}.bias,
///   label.table     (num_discrete + 1 rows, the last one is the null row),
///   label.coord_weight, label.coord_bias, label.null  (coordinate path).
class DenoiserNet {
 public:
  // Zero-initialised parameters.
  explicit DenoiserNet(DenoiserConfig config);
  // Scaled-uniform weights, zero biases, N(0, 0.02^2) embeddings.
  static DenoiserNet initialized(DenoiserConfig config, std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::string_view name) const;

  Eigen::Map<Matrix> view(const ParamBlock& b);
  Eigen::Map<const Matrix> view(const ParamBlock& b) const;

  Vector embed_label(const ConceptLabel& label) const;
  bool accepts(const ConceptLabel& label) const;

  Matrix forward(const DenoiserBatch& batch) const;
  // Shared step and label for every row (the sampling path).
  Matrix forward(const Matrix& x, int t, const ConceptLabel& label) const;

  LossGradient backward(const DenoiserBatch& batch) const;

  bool all_finite() const;

 private:
  struct Activations;
  void layout();
  Matrix label_features(const std::vector<ConceptLabel>& labels) const;
  Matrix assemble_input(const Matrix& x, const std::vector<int>& t, const std::vector<ConceptLabel>& labels) const;
  Matrix run(const Matrix& input, Activations* keep) const;
  void check_batch(const DenoiserBatch& batch, bool need_target) const;

  DenoiserConfig config_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> params_;
  int layer_count_ = 0;
};

/// ScoreField view over a trained network.
class DenoiserField final : public ScoreField {
 public:
  DenoiserField(std::shared_ptr<const DenoiserNet> net, NoiseSchedule sched);

  int dim() const override { return net_->config().data_dim; }
  const NoiseSchedule& schedule() const override { return sched_; }
  std::string id() const override;
  bool supports(const ConceptLabel& label) const override { return net_->accepts(label); }
  const DenoiserNet& net() const { return *net_; }

 protected:
  Matrix evaluate(const Matrix& x, int t, const ConceptLabel& label) const override;

 private:
  std::shared_ptr<const DenoiserNet> net_;
  NoiseSchedule sched_;
};

}  // namespace compdiff
