// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace compdiff {

// Bad input: malformed config, out-of-range argument, inconsistent shapes.
// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while running a well-formed request (divergence, I/O, corrupt
// artifact). The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptCheckpoint : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ScheduleMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Compose-spec syntax error; `position` is the 0-based byte offset.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t position, const std::string& what)
      : ValidationError("at position " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace compdiff
