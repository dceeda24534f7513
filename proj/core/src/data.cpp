// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "compdiff/errors.hpp"
#include "compdiff/rng.hpp"

namespace compdiff {

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "points2d") return DatasetKind::points2d;
  if (text == "blobs") return DatasetKind::blobs;
  throw ValidationError("unknown dataset kind '" + std::string(text) + "'");
}

std::string to_string(DatasetKind kind) { return kind == DatasetKind::points2d ? "points2d" : "blobs"; }

void DatasetConfig::validate() const {
  if (count < 1) throw ValidationError("dataset count must be positive");
  if (kind == DatasetKind::points2d) {
    if (concepts.empty()) throw ValidationError("points2d dataset needs at least one concept");
    std::set<int> ids;
    for (const auto& c : concepts) {
      c.spec.validate();
      if (c.spec.dim() != 2) throw ValidationError("points2d concepts must be two-dimensional");
      if (c.id < 0 || c.id >= static_cast<int>(concepts.size())) {
        throw ValidationError("concept ids must lie in [0, concept count)");
      }
      if (!ids.insert(c.id).second) throw ValidationError("duplicate concept id " + std::to_string(c.id));
    }
  } else {
    if (blobs.height < 8 || blobs.width < 8) throw ValidationError("blob grid must be at least 8x8");
    if (!(blobs.blob_std > 0.0)) throw ValidationError("blob_std must be positive");
    if (blobs.min_objects < 1 || blobs.max_objects < blobs.min_objects) {
      throw ValidationError("invalid objects-per-scene range");
    }
    if (blobs.retry_budget < 0) throw ValidationError("retry budget must be nonnegative");
  }
}

int DatasetConfig::data_dim() const { return kind == DatasetKind::points2d ? 2 : blobs.height * blobs.width; }

Dataset gen_points2d(const DatasetConfig& config, std::uint64_t seed) {
  if (config.kind != DatasetKind::points2d) throw ValidationError("gen_points2d needs a points2d config");
  config.validate();
  Dataset out;
  out.kind = DatasetKind::points2d;
  out.x.resize(config.count, 2);
  out.labels.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    Philox rng(seed, derive_stream(streams::kDataExample, static_cast<std::uint64_t>(i)));
    const auto& concept_ = config.concepts[rng.below(config.concepts.size())];
    for (int k = 0; k < 2; ++k) out.x(i, k) = concept_.spec.mean[k] + std::sqrt(concept_.spec.var[k]) * rng.normal();
    out.labels.push_back(ConceptLabel::discrete(concept_.id));
  }
  return out;
}

double cell_center(int index, int cells) { return -1.0 + 2.0 * index / cells; }

RowVector render_intensity(std::span<const Position> objects, const BlobsConfig& config) {
  const int h = config.height, w = config.width;
  RowVector img = RowVector::Zero(h * w);
  const double inv2s2 = 1.0 / (2.0 * config.blob_std * config.blob_std);
  for (const auto& p : objects) {
    for (int r = 0; r < h; ++r) {
      const double dy = (cell_center(r, h) - p[1]) * h / 2.0;
      for (int c = 0; c < w; ++c) {
        const double dx = (cell_center(c, w) - p[0]) * w / 2.0;
        img[r * w + c] += std::exp(-(dx * dx + dy * dy) * inv2s2);
      }
    }
  }
  return img.cwiseMin(1.0).cwiseMax(0.0);
}

RowVector render_blobs(std::span<const Position> objects, const BlobsConfig& config) {
  return (2.0 * render_intensity(objects, config).array() - 1.0).matrix();
}

Dataset gen_blobs(const DatasetConfig& config, std::uint64_t seed) {
  if (config.kind != DatasetKind::blobs) throw ValidationError("gen_blobs needs a blobs config");
  config.validate();
  const auto& bc = config.blobs;
  Dataset out;
  out.kind = DatasetKind::blobs;
  out.x.resize(config.count, bc.height * bc.width);
  out.labels.reserve(static_cast<std::size_t>(config.count));
  out.objects.reserve(static_cast<std::size_t>(config.count));
  const double min_sep = 2.0 * bc.blob_std;
  const double x_span = cell_center(bc.width - 1, bc.width) + 1.0;
  const double y_span = cell_center(bc.height - 1, bc.height) + 1.0;
  for (int i = 0; i < config.count; ++i) {
    Philox rng(seed, derive_stream(streams::kDataExample, static_cast<std::uint64_t>(i)));
    const int k = bc.min_objects + static_cast<int>(rng.below(static_cast<std::uint64_t>(bc.max_objects - bc.min_objects + 1)));
    std::vector<Position> objects;
    int rejected = 0;
    while (static_cast<int>(objects.size()) < k) {
      const Position p{-1.0 + x_span * rng.uniform(), -1.0 + y_span * rng.uniform()};
      const bool clear = std::all_of(objects.begin(), objects.end(), [&](const Position& q) {
        const double dx = (p[0] - q[0]) * bc.width / 2.0;
        const double dy = (p[1] - q[1]) * bc.height / 2.0;
        return std::hypot(dx, dy) >= min_sep;
      });
      if (clear) {
        objects.push_back(p);
      } else if (++rejected > bc.retry_budget) {
        throw RuntimeFailure("blob scene " + std::to_string(i) + ": cannot place " + std::to_string(k) +
                             " objects with separation " + std::to_string(min_sep) + " cells");
      }
    }
    out.x.row(i) = render_blobs(objects, bc);
    const auto& chosen = objects[rng.below(objects.size())];
    out.labels.push_back(ConceptLabel::coord({chosen[0], chosen[1]}));
    out.objects.push_back(std::move(objects));
  }
  return out;
}

Dataset generate_dataset(const DatasetConfig& config) {
  return config.kind == DatasetKind::points2d ? gen_points2d(config, config.seed) : gen_blobs(config, config.seed);
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t size, std::size_t batch_size, std::uint64_t epoch_seed) {
  if (size == 0) throw ValidationError("cannot batch an empty dataset");
  if (batch_size == 0 || batch_size > size) throw ValidationError("batch size must be in [1, dataset size]");
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Philox rng(epoch_seed, streams::kEpoch);
  for (std::size_t i = size - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < size; start += batch_size) {
    const std::size_t end = std::min(size, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace compdiff
