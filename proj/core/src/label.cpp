// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/label.hpp"

#include <sstream>

#include "compdiff/errors.hpp"

namespace compdiff {

int ConceptLabel::id() const {
  if (const auto* d = std::get_if<Discrete>(&value_)) return d->id;
  throw ValidationError("label " + str() + " is not discrete");
}

const std::vector<double>& ConceptLabel::coords() const {
  if (const auto* c = std::get_if<Coord>(&value_)) return c->values;
  throw ValidationError("label " + str() + " is not a coordinate");
}

std::string ConceptLabel::str() const {
  if (is_null()) return "null";
  if (is_discrete()) return "#" + std::to_string(std::get<Discrete>(value_).id);
  std::ostringstream os;
  os.precision(17);
  os << '@';
  const auto& v = std::get<Coord>(value_).values;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

}  // namespace compdiff
