// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace compdiff::cli {

inline constexpr const char* kOutDirEnv = "COMPDIFF_OUT_DIR";

// Runs one subcommand. Returns 0 on success, 1 on validation errors
// (including bad command lines), 2 on runtime failures.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// --out-dir if given, else $COMPDIFF_OUT_DIR, else "out".
std::filesystem::path resolve_out_dir(const std::string& flag);

std::filesystem::path provenance_path(const std::filesystem::path& artifact);

struct OracleCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Analytic-vs-grid agreement and every compose identity on the config's
// analytic field.
std::vector<OracleCheck> run_oracle_checks(const ExperimentConfig& config);
std::string format_oracle_table(const std::vector<OracleCheck>& checks);

// Scatter plot (2 columns) or a mosaic of cell grids (height * width
// columns).
std::string points_svg(const Matrix& samples);
std::string blobs_svg(const Matrix& samples, int height, int width, int max_tiles = 16);

}  // namespace compdiff::cli
