// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "compdiff/label.hpp"
#include "compdiff/linalg.hpp"
#include "compdiff/scorefield.hpp"

namespace compdiff {

enum class DatasetKind { points2d, blobs };
DatasetKind parse_dataset_kind(std::string_view text);
std::string to_string(DatasetKind kind);

struct PointConcept {
  int id;
  GaussianConceptSpec spec;
};

struct BlobsConfig {
  int height = 16;
  int width = 16;
  double blob_std = 1.0;  // in grid cells
  int min_objects = 1;
  int max_objects = 5;
  int retry_budget = 100;  // rejected placements allowed per scene
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::points2d;
  std::vector<PointConcept> concepts;  // points2d
  BlobsConfig blobs;                   // blobs
  int count = 1000;
  std::uint64_t seed = 0;

  void validate() const;
  int data_dim() const;
};

using Position = std::array<double, 2>;

struct Dataset {
  DatasetKind kind = DatasetKind::points2d;
  Matrix x;                                  // one example per row, values for blobs in [-1, 1]
  std::vector<ConceptLabel> labels;          // discrete ids (points2d) or Coord of one object (blobs)
  std::vector<std::vector<Position>> objects;  // blobs only: every object in the scene

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(x.cols()); }
};

// Each example picks a concept uniformly and samples its Gaussian.
Dataset gen_points2d(const DatasetConfig& config, std::uint64_t seed);

// Scenes with min..max Gaussian blobs at uniform positions over the span
// of cell centres, [-1, cell_center(w-1, w)] x [-1, cell_center(h-1, h)],
// at least 2 * blob_std cells apart. The label is one object's position.
Dataset gen_blobs(const DatasetConfig& config, std::uint64_t seed);

Dataset generate_dataset(const DatasetConfig& config);

// Cell centre of column/row `index` on an axis with `cells` cells:
// -1 + 2 * index / cells, so cell cells/2 sits at the origin.
double cell_center(int index, int cells);

// Rasterises blobs to intensities clipped to [0, 1] (row-major, row = y).
RowVector render_intensity(std::span<const Position> objects, const BlobsConfig& config);
// Same scene mapped affinely to [-1, 1].
RowVector render_blobs(std::span<const Position> objects, const BlobsConfig& config);

// Seeded permutation of 0..size-1 cut into batches; the last batch may be
// short.
std::vector<std::vector<std::size_t>> minibatches(std::size_t size, std::size_t batch_size, std::uint64_t epoch_seed);

// points2d CSV: header "x,y,label_id".
void write_points_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_points_csv(const std::filesystem::path& path);

// Blob raster, little-endian:
//   bytes 0..7   magic "CDBLOBS1"
//   bytes 8..11  uint32 header length L
//   next L bytes JSON header {format, version, height, width, count, blob_std, seed}
//   count records of: float64 label_x, float64 label_y, height*width float64 pixels
std::string blobs_to_bytes(const Dataset& data, const BlobsConfig& config, std::uint64_t seed);
Dataset blobs_from_bytes(const std::string& bytes, BlobsConfig* config = nullptr);

}  // namespace compdiff
