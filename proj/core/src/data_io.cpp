// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <json.hpp>

#include "compdiff/data.hpp"
#include "compdiff/errors.hpp"
#include "compdiff/io.hpp"

namespace compdiff {
namespace {

constexpr char kMagic[8] = {'C', 'D', 'B', 'L', 'O', 'B', 'S', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ValidationError("blob raster is truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t uint(int width) {
    const auto* p = reinterpret_cast<const unsigned char*>(take(static_cast<std::size_t>(width)));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_points_csv(const Dataset& data, const std::filesystem::path& path) {
  if (data.kind != DatasetKind::points2d) throw ValidationError("points CSV needs a points2d dataset");
  Matrix table(data.x.rows(), 3);
  table.leftCols(2) = data.x;
  for (std::size_t i = 0; i < data.size(); ++i) table(static_cast<Eigen::Index>(i), 2) = data.labels[i].id();
  write_file_atomic(path, matrix_to_csv(table, {"x", "y", "label_id"}));
}

Dataset read_points_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const Matrix table = matrix_from_csv(read_file(path), &header);
  if (header != std::vector<std::string>{"x", "y", "label_id"}) throw ValidationError("points CSV needs header x,y,label_id");
  Dataset data;
  data.kind = DatasetKind::points2d;
  data.x = table.leftCols(2);
  for (Eigen::Index r = 0; r < table.rows(); ++r) data.labels.push_back(ConceptLabel::discrete(static_cast<int>(table(r, 2))));
  return data;
}

std::string blobs_to_bytes(const Dataset& data, const BlobsConfig& config, std::uint64_t seed) {
  if (data.kind != DatasetKind::blobs) throw ValidationError("blob raster needs a blobs dataset");
  if (data.x.cols() != config.height * config.width) throw ValidationError("blob raster shape mismatch");
  const nlohmann::json header{{"format", "compdiff-blobs"}, {"version", 1}, {"height", config.height},
                              {"width", config.width},      {"count", data.size()}, {"blob_std", config.blob_std},
                              {"seed", seed}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& c = data.labels[i].coords();
    put_f64(out, c.at(0));
    put_f64(out, c.at(1));
    for (Eigen::Index k = 0; k < data.x.cols(); ++k) put_f64(out, data.x(static_cast<Eigen::Index>(i), k));
  }
  return out;
}

Dataset blobs_from_bytes(const std::string& bytes, BlobsConfig* config) {
  Reader in(bytes);
  if (std::memcmp(in.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) throw ValidationError("not a blob raster file");
  const auto header_len = static_cast<std::size_t>(in.uint(4));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(std::string(in.take(header_len), header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("blob raster header: ") + e.what());
  }
  const int h = header.at("height").get<int>();
  const int w = header.at("width").get<int>();
  const auto count = header.at("count").get<std::size_t>();
  if (config) {
    config->height = h;
    config->width = w;
    config->blob_std = header.at("blob_std").get<double>();
  }
  Dataset data;
  data.kind = DatasetKind::blobs;
  data.x.resize(static_cast<Eigen::Index>(count), h * w);
  for (std::size_t i = 0; i < count; ++i) {
    const double lx = in.f64();
    const double ly = in.f64();
    data.labels.push_back(ConceptLabel::coord({lx, ly}));
    for (int k = 0; k < h * w; ++k) data.x(static_cast<Eigen::Index>(i), k) = in.f64();
  }
  if (!in.done()) throw ValidationError("blob raster has trailing bytes");
  return data;
}

}  // namespace compdiff
