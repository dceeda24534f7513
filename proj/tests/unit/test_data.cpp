// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "compdiff/data.hpp"
#include "compdiff/errors.hpp"

namespace compdiff {
namespace {

GaussianConceptSpec gauss(double mx, double my, double v) {
  GaussianConceptSpec s;
  s.mean = Vector{{mx, my}};
  s.var = Vector{{v, v}};
  return s;
}

DatasetConfig points(std::vector<PointConcept> concepts, int count, std::uint64_t seed = 0) {
  DatasetConfig c;
  c.kind = DatasetKind::points2d;
  c.concepts = std::move(concepts);
  c.count = count;
  c.seed = seed;
  return c;
}

DatasetConfig blobs(int count, int hw = 16, double std = 1.0) {
  DatasetConfig c;
  c.kind = DatasetKind::blobs;
  c.blobs.height = hw;
  c.blobs.width = hw;
  c.blobs.blob_std = std;
  c.count = count;
  return c;
}

TEST(Points2d, MeanOfNarrowConcept) {
  const Dataset d = gen_points2d(points({{0, gauss(0, 0, 0.01)}}, 1000), 0);
  EXPECT_LT(d.x.colwise().mean().cwiseAbs().maxCoeff(), 0.01);
  EXPECT_EQ(d.dim(), 2);
}

TEST(Points2d, ConceptCountsAreBalanced) {
  const Dataset d = gen_points2d(points({{0, gauss(-2, 0, 1)}, {1, gauss(2, 0, 1)}}, 10000), 3);
  const auto n0 = std::count(d.labels.begin(), d.labels.end(), ConceptLabel::discrete(0));
  EXPECT_NEAR(static_cast<double>(n0), 5000.0, 3.0 * std::sqrt(10000 * 0.25));
}

TEST(Points2d, Deterministic) {
  const auto cfg = points({{0, gauss(-2, 0, 1)}, {1, gauss(2, 0, 1)}}, 500);
  const Dataset a = gen_points2d(cfg, 8);
  const Dataset b = gen_points2d(cfg, 8);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.x, gen_points2d(cfg, 9).x);
}

TEST(Points2d, PerConceptCovariance) {
  const Dataset d = gen_points2d(points({{0, gauss(-2, 0, 0.5)}, {1, gauss(2, 1, 2.0)}}, 12000), 4);
  for (int id : {0, 1}) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] == ConceptLabel::discrete(id)) rows.push_back(static_cast<Eigen::Index>(i));
    }
    ASSERT_GE(rows.size(), 5000u);
    Matrix sub(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = d.x.row(rows[k]);
    const Matrix c = sub.rowwise() - sub.colwise().mean();
    const Matrix cov = c.transpose() * c / static_cast<double>(sub.rows() - 1);
    const double v = id == 0 ? 0.5 : 2.0;
    EXPECT_NEAR(cov(0, 0), v, 0.1 * v);
    EXPECT_NEAR(cov(1, 1), v, 0.1 * v);
    EXPECT_LT(std::abs(cov(0, 1)), 0.1 * v);
  }
}

TEST(Points2d, Validation) {
  EXPECT_THROW(gen_points2d(points({}, 10), 0), ValidationError);
  EXPECT_THROW(gen_points2d(points({{0, gauss(0, 0, 1)}, {0, gauss(1, 0, 1)}}, 10), 0), ValidationError);
  EXPECT_THROW(gen_points2d(points({{0, gauss(0, 0, -1)}}, 10), 0), ValidationError);
  EXPECT_THROW(gen_points2d(points({{0, gauss(0, 0, 1)}}, 0), 0), ValidationError);
}

TEST(Blobs, SingleCentredBlob) {
  BlobsConfig g;
  const std::vector<Position> one{{0.0, 0.0}};
  const RowVector img = render_intensity(one, g);
  Eigen::Index arg = 0;
  EXPECT_EQ(img.maxCoeff(&arg), 1.0);
  EXPECT_EQ(arg, 8 * 16 + 8);
  EXPECT_EQ(cell_center(8, 16), 0.0);
  const RowVector mapped = render_blobs(one, g);
  EXPECT_EQ(mapped.maxCoeff(), 1.0);
  EXPECT_GE(mapped.minCoeff(), -1.0);
}

TEST(Blobs, IntensityGrowsWithObjectCount) {
  double prev = 0.0;
  for (int k = 1; k <= 5; ++k) {
    DatasetConfig c = blobs(1000);
    c.blobs.min_objects = k;
    c.blobs.max_objects = k;
    const Dataset d = gen_blobs(c, 10 + k);
    const double total = ((d.x.array() + 1.0) / 2.0).sum() / 1000.0;
    EXPECT_GT(total, prev) << k;
    prev = total;
  }
}

TEST(Blobs, ScenesAreValid) {
  const Dataset d = gen_blobs(blobs(2000, 8, 0.75), 1);
  EXPECT_EQ(d.dim(), 64);
  EXPECT_LE(d.x.maxCoeff(), 1.0);
  EXPECT_GE(d.x.minCoeff(), -1.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& objs = d.objects[i];
    ASSERT_GE(objs.size(), 1u);
    ASSERT_LE(objs.size(), 5u);
    const auto& c = d.labels[i].coords();
    ASSERT_TRUE(std::any_of(objs.begin(), objs.end(), [&](const Position& p) { return p[0] == c[0] && p[1] == c[1]; }));
    for (std::size_t a = 0; a < objs.size(); ++a) {
      for (std::size_t b = a + 1; b < objs.size(); ++b) {
        ASSERT_GE(std::hypot(objs[a][0] - objs[b][0], objs[a][1] - objs[b][1]) * 4.0, 1.5 - 1e-12);
      }
    }
    // The label is visible at its nearest cell.
    const int col = std::clamp(static_cast<int>(std::lround((c[0] + 1.0) * 4.0)), 0, 7);
    const int row = std::clamp(static_cast<int>(std::lround((c[1] + 1.0) * 4.0)), 0, 7);
    ASSERT_GT((d.x(static_cast<Eigen::Index>(i), row * 8 + col) + 1.0) / 2.0, 0.5) << i;
  }
}

TEST(Blobs, Deterministic) {
  const Dataset a = gen_blobs(blobs(50), 5);
  const Dataset b = gen_blobs(blobs(50), 5);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Blobs, UnsatisfiableSeparation) {
  DatasetConfig c = blobs(10, 8, 4.0);
  c.blobs.min_objects = 5;
  c.blobs.max_objects = 5;
  EXPECT_THROW(gen_blobs(c, 0), RuntimeFailure);
  EXPECT_THROW(gen_blobs(blobs(10, 4), 0), ValidationError);
}

TEST(Minibatches, Properties) {
  const auto one = minibatches(37, 37, 1);
  ASSERT_EQ(one.size(), 1u);
  std::vector<std::size_t> sorted = one[0];
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> expect(37);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(sorted, expect);

  const auto batches = minibatches(103, 10, 2);
  EXPECT_EQ(batches.size(), 11u);
  EXPECT_EQ(batches.back().size(), 3u);
  std::vector<std::size_t> all;
  for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  expect.resize(103);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(all, expect);

  EXPECT_NE(minibatches(200, 200, 3)[0], minibatches(200, 200, 4)[0]);
  EXPECT_EQ(minibatches(200, 200, 3)[0], minibatches(200, 200, 3)[0]);
  EXPECT_THROW(minibatches(0, 1, 0), ValidationError);
  EXPECT_THROW(minibatches(5, 6, 0), ValidationError);
}

class DataFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "compdiff_data_test";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(DataFiles, PointsCsvRoundTrip) {
  const Dataset d = gen_points2d(points({{0, gauss(-2, 0, 1)}, {1, gauss(2, 0, 1)}}, 50), 1);
  write_points_csv(d, dir_ / "p.csv");
  const Dataset back = read_points_csv(dir_ / "p.csv");
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.labels, d.labels);
}

TEST_F(DataFiles, BlobRasterLayout) {
  DatasetConfig c = blobs(3, 8, 0.75);
  c.seed = 4;
  const Dataset d = gen_blobs(c, 4);
  const std::string bytes = blobs_to_bytes(d, c.blobs, 4);
  ASSERT_EQ(bytes.substr(0, 8), "CDBLOBS1");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  EXPECT_EQ(bytes.size(), 12 + len + 3 * (2 + 64) * 8);
  EXPECT_EQ(bytes[12], '{');
  BlobsConfig geom;
  const Dataset back = blobs_from_bytes(bytes, &geom);
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(geom.height, 8);
  EXPECT_EQ(geom.blob_std, 0.75);
  EXPECT_THROW(blobs_from_bytes(bytes.substr(0, bytes.size() - 1)), ValidationError);
  EXPECT_THROW(blobs_from_bytes("XXXXXXXX" + bytes.substr(8)), ValidationError);
}

TEST(DatasetKind, Names) {
  EXPECT_EQ(parse_dataset_kind("blobs"), DatasetKind::blobs);
  EXPECT_EQ(to_string(DatasetKind::points2d), "points2d");
  EXPECT_THROW(parse_dataset_kind("clevr"), ValidationError);
}

}  // namespace
}  // namespace compdiff
