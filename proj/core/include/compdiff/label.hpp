// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <string>
#include <variant>
#include <vector>

namespace compdiff {

/// Conditioning value for a score field: the null label (unconditional
/// model), a discrete attribute id, or a continuous coordinate.
///
/// Labels are totally ordered (null < discrete < coord, then by id or
/// lexicographically by coordinates); composition relies on that order to
/// sum guidance terms canonically.
class ConceptLabel {
 public:
  struct Null {
    auto operator<=>(const Null&) const = default;
  };
  struct Discrete {
    int id;
    auto operator<=>(const Discrete&) const = default;
  };
  struct Coord {
    std::vector<double> values;
    auto operator<=>(const Coord&) const = default;
  };

  ConceptLabel() = default;
  static ConceptLabel null() { return ConceptLabel(Null{}); }
  static ConceptLabel discrete(int id) { return ConceptLabel(Discrete{id}); }
  static ConceptLabel coord(std::vector<double> values) { return ConceptLabel(Coord{std::move(values)}); }

  bool is_null() const noexcept { return std::holds_alternative<Null>(value_); }
  bool is_discrete() const noexcept { return std::holds_alternative<Discrete>(value_); }
  bool is_coord() const noexcept { return std::holds_alternative<Coord>(value_); }

  int id() const;                               // discrete only
  const std::vector<double>& coords() const;    // coord only

  // "null", "#3", "@0.25,-0.5"
  std::string str() const;

  std::partial_ordering operator<=>(const ConceptLabel& other) const { return value_ <=> other.value_; }
  bool operator==(const ConceptLabel& other) const = default;

 private:
  explicit ConceptLabel(std::variant<Null, Discrete, Coord> v) : value_(std::move(v)) {}
  std::variant<Null, Discrete, Coord> value_{Null{}};
};

}  // namespace compdiff
