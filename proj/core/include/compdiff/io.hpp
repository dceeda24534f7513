// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "compdiff/linalg.hpp"

namespace compdiff {

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Rows as CSV with a header (x1..xd unless names are given). Numbers use
// the shortest representation that round-trips.
std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header = {});
// Parses a numeric CSV with one header line. Throws ValidationError on
// ragged or non-numeric content; an empty body yields a 0-row matrix.
Matrix matrix_from_csv(std::string_view text, std::vector<std::string>* header = nullptr);

std::string format_double(double v);

}  // namespace compdiff
