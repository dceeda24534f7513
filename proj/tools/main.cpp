// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return compdiff::cli::run_command(argc, argv, std::cout, std::cerr); }
