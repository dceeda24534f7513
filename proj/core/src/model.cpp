// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "compdiff/errors.hpp"
#include "compdiff/rng.hpp"

namespace compdiff {
namespace {

constexpr double kEmbedInitStd = 0.02;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string layer_name(int i, const char* part) { return "layer" + std::to_string(i) + "." + part; }

}  // namespace

void DenoiserConfig::validate() const {
  if (data_dim < 1 || time_embed_dim < 2 || label_embed_dim < 1) {
    throw ValidationError("denoiser dimensions must be positive");
  }
  if (time_embed_dim % 2 != 0) throw ValidationError("time_embed_dim must be even");
  if (hidden_widths.empty()) throw ValidationError("denoiser needs at least one hidden layer");
  for (int w : hidden_widths) {
    if (w < 1) throw ValidationError("hidden widths must be positive");
  }
  if (num_discrete_concepts < 0 || coord_dim < 0) throw ValidationError("conditioning sizes must be nonnegative");
  if ((num_discrete_concepts > 0) == (coord_dim > 0)) {
    throw ValidationError("exactly one of num_discrete_concepts and coord_dim must be positive");
  }
}

Vector embed_time(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ValidationError("time embedding dimension must be even and positive");
  const int half = dim / 2;
  Vector out(dim);
  for (int k = 0; k < half; ++k) {
    const double freq = half == 1 ? 1.0 : std::pow(1e-4, static_cast<double>(k) / (half - 1));
    out[2 * k] = std::sin(t * freq);
    out[2 * k + 1] = std::cos(t * freq);
  }
  return out;
}

struct DenoiserNet::Activations {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
};

DenoiserNet::DenoiserNet(DenoiserConfig config) : config_(std::move(config)) {
  config_.validate();
  layout();
}

void DenoiserNet::layout() {
  blocks_.clear();
  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    blocks_.push_back({std::move(name), rows, cols, offset});
    offset += static_cast<std::size_t>(rows) * cols;
  };
  int fan_in = config_.input_dim();
  std::vector<int> widths = config_.hidden_widths;
  widths.push_back(config_.data_dim);
  layer_count_ = static_cast<int>(widths.size());
  for (int i = 0; i < layer_count_; ++i) {
    add(layer_name(i, "weight"), widths[i], fan_in);
    add(layer_name(i, "bias"), 1, widths[i]);
    fan_in = widths[i];
  }
  if (config_.num_discrete_concepts > 0) {
    add("label.table", config_.num_discrete_concepts + 1, config_.label_embed_dim);
  } else {
    add("label.coord_weight", config_.label_embed_dim, config_.coord_dim);
    add("label.coord_bias", 1, config_.label_embed_dim);
    add("label.null", 1, config_.label_embed_dim);
  }
  params_.assign(offset, 0.0);
}

DenoiserNet DenoiserNet::initialized(DenoiserConfig config, std::uint64_t seed) {
  DenoiserNet net(std::move(config));
  Philox rng(seed, streams::kInit);
  for (const auto& b : net.blocks_) {
    auto w = net.view(b);
    const bool weight_like = b.name.ends_with(".weight") || b.name == "label.coord_weight";
    const bool embedding = b.name == "label.table" || b.name == "label.null";
    if (weight_like) {
      const double limit = std::sqrt(6.0 / (b.rows + b.cols));
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = limit * (2.0 * rng.uniform() - 1.0);
    } else if (embedding) {
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = kEmbedInitStd * rng.normal();
    }
  }
  return net;
}

const ParamBlock& DenoiserNet::block(std::string_view name) const {
  auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const ParamBlock& b) { return b.name == name; });
  if (it == blocks_.end()) throw ValidationError("no parameter block '" + std::string(name) + "'");
  return *it;
}

Eigen::Map<Matrix> DenoiserNet::view(const ParamBlock& b) {
  return Eigen::Map<Matrix>(params_.data() + b.offset, b.rows, b.cols);
}

Eigen::Map<const Matrix> DenoiserNet::view(const ParamBlock& b) const {
  return Eigen::Map<const Matrix>(params_.data() + b.offset, b.rows, b.cols);
}

bool DenoiserNet::accepts(const ConceptLabel& label) const {
  if (label.is_null()) return true;
  if (label.is_discrete()) return label.id() >= 0 && label.id() < config_.num_discrete_concepts;
  return config_.coord_dim > 0 && static_cast<int>(label.coords().size()) == config_.coord_dim;
}

Vector DenoiserNet::embed_label(const ConceptLabel& label) const {
  if (!accepts(label)) throw ValidationError("label " + label.str() + " is not valid for this network");
  if (config_.num_discrete_concepts > 0) {
    const int row = label.is_null() ? config_.num_discrete_concepts : label.id();
    return view(block("label.table")).row(row).transpose();
  }
  if (label.is_null()) return view(block("label.null")).row(0).transpose();
  const auto& c = label.coords();
  const Vector coord = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
  return view(block("label.coord_weight")) * coord + view(block("label.coord_bias")).row(0).transpose();
}

Matrix DenoiserNet::label_features(const std::vector<ConceptLabel>& labels) const {
  Matrix out(static_cast<Eigen::Index>(labels.size()), config_.label_embed_dim);
  for (std::size_t r = 0; r < labels.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = embed_label(labels[r]).transpose();
  return out;
}

Matrix DenoiserNet::assemble_input(const Matrix& x, const std::vector<int>& t,
                                   const std::vector<ConceptLabel>& labels) const {
  const Eigen::Index rows = x.rows();
  Matrix input(rows, config_.input_dim());
  input.leftCols(config_.data_dim) = x;
  for (Eigen::Index r = 0; r < rows; ++r) {
    input.row(r).segment(config_.data_dim, config_.time_embed_dim) =
        embed_time(t[static_cast<std::size_t>(r)], config_.time_embed_dim).transpose();
  }
  input.rightCols(config_.label_embed_dim) = label_features(labels);
  return input;
}

Matrix DenoiserNet::run(const Matrix& input, Activations* keep) const {
  Matrix h = input;
  for (int i = 0; i < layer_count_; ++i) {
    const auto w = view(blocks_[2 * i]);
    const auto b = view(blocks_[2 * i + 1]);
    Matrix z(h.rows(), w.rows());
    z.noalias() = h * w.transpose();
    z.rowwise() += b.row(0);
    if (keep) keep->inputs.push_back(h);
    if (i + 1 == layer_count_) return z;
    if (keep) keep->pre.push_back(z);
    h = z.unaryExpr([](double v) { return v * sigmoid(v); });
  }
  return h;  // unreachable: layer_count_ >= 2
}

void DenoiserNet::check_batch(const DenoiserBatch& batch, bool need_target) const {
  const auto rows = static_cast<std::size_t>(batch.x.rows());
  if (rows == 0) throw ValidationError("empty batch");
  if (batch.x.cols() != config_.data_dim) throw ValidationError("batch dimension does not match the network");
  if (batch.t.size() != rows || batch.labels.size() != rows) throw ValidationError("batch row counts disagree");
  if (need_target && (batch.target.rows() != batch.x.rows() || batch.target.cols() != batch.x.cols())) {
    throw ValidationError("target shape does not match the batch");
  }
  if (!batch.x.allFinite()) throw ValidationError("non-finite network input");
}

Matrix DenoiserNet::forward(const DenoiserBatch& batch) const {
  check_batch(batch, false);
  return run(assemble_input(batch.x, batch.t, batch.labels), nullptr);
}

Matrix DenoiserNet::forward(const Matrix& x, int t, const ConceptLabel& label) const {
  if (x.cols() != config_.data_dim) throw ValidationError("input dimension does not match the network");
  if (!x.allFinite()) throw ValidationError("non-finite network input");
  Matrix input(x.rows(), config_.input_dim());
  input.leftCols(config_.data_dim) = x;
  input.middleCols(config_.data_dim, config_.time_embed_dim).rowwise() =
      embed_time(t, config_.time_embed_dim).transpose();
  input.rightCols(config_.label_embed_dim).rowwise() = embed_label(label).transpose();
  return run(input, nullptr);
}

LossGradient DenoiserNet::backward(const DenoiserBatch& batch) const {
  check_batch(batch, true);
  Activations acts;
  const Matrix input = assemble_input(batch.x, batch.t, batch.labels);
  const Matrix out = run(input, &acts);
  const auto rows = static_cast<double>(batch.x.rows());

  LossGradient result;
  const Matrix residual = out - batch.target;
  result.loss = residual.squaredNorm() / rows;
  result.grad.assign(params_.size(), 0.0);
  auto grad_view = [&](const ParamBlock& b) {
    return Eigen::Map<Matrix>(result.grad.data() + b.offset, b.rows, b.cols);
  };

  Matrix delta = (2.0 / rows) * residual;
  for (int i = layer_count_ - 1; i >= 0; --i) {
    grad_view(blocks_[2 * i]).noalias() = delta.transpose() * acts.inputs[i];
    grad_view(blocks_[2 * i + 1]) = delta.colwise().sum();
    Matrix upstream(delta.rows(), acts.inputs[i].cols());
    upstream.noalias() = delta * view(blocks_[2 * i]);
    if (i == 0) {
      delta = std::move(upstream);
      break;
    }
    const Matrix& z = acts.pre[i - 1];
    delta = upstream.cwiseProduct(z.unaryExpr([](double v) {
      const double s = sigmoid(v);
      return s * (1.0 + v * (1.0 - s));
    }));
  }

  // delta now holds d loss / d input; route the label slice to embeddings.
  const Matrix label_grad = delta.rightCols(config_.label_embed_dim);
  if (config_.num_discrete_concepts > 0) {
    auto table = grad_view(block("label.table"));
    for (std::size_t r = 0; r < batch.labels.size(); ++r) {
      const auto& label = batch.labels[r];
      const int row = label.is_null() ? config_.num_discrete_concepts : label.id();
      table.row(row) += label_grad.row(static_cast<Eigen::Index>(r));
    }
  } else {
    auto weight = grad_view(block("label.coord_weight"));
    auto bias = grad_view(block("label.coord_bias"));
    auto null_row = grad_view(block("label.null"));
    for (std::size_t r = 0; r < batch.labels.size(); ++r) {
      const auto& label = batch.labels[r];
      const auto g = label_grad.row(static_cast<Eigen::Index>(r));
      if (label.is_null()) {
        null_row.row(0) += g;
        continue;
      }
      const auto& c = label.coords();
      for (int k = 0; k < config_.coord_dim; ++k) weight.col(k) += c[static_cast<std::size_t>(k)] * g.transpose();
      bias.row(0) += g;
    }
  }
  return result;
}

bool DenoiserNet::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

DenoiserField::DenoiserField(std::shared_ptr<const DenoiserNet> net, NoiseSchedule sched)
    : net_(std::move(net)), sched_(std::move(sched)) {
  if (!net_) throw ValidationError("DenoiserField needs a network");
}

std::string DenoiserField::id() const {
  std::ostringstream os;
  os << "denoiser(d=" << net_->config().data_dim << ",hidden=";
  const auto& h = net_->config().hidden_widths;
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "x" : "") << h[i];
  os << ",params=" << net_->param_count() << ")";
  return os.str();
}

Matrix DenoiserField::evaluate(const Matrix& x, int t, const ConceptLabel& label) const {
  return net_->forward(x, t, label);
}

}  // namespace compdiff
