// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <charconv>
#include <cmath>

#include "compdiff/compose.hpp"
#include "compdiff/errors.hpp"
#include "compdiff/io.hpp"

namespace compdiff {
namespace {

class Parser {
 public:
  Parser(std::string_view text, const LabelResolver& resolve, int coord_dim)
      : text_(text), resolve_(resolve), coord_dim_(coord_dim) {}

  std::vector<Term> parse() {
    std::vector<Term> terms;
    skip_space();
    if (at_end()) throw ParseError(pos_, "empty composition");
    terms.push_back(term());
    skip_space();
    while (!at_end()) {
      expect(',');
      terms.push_back(term());
      skip_space();
    }
    return terms;
  }

 private:
  Term term() {
    skip_space();
    Term out;
    if (peek() == '~') {
      ++pos_;
      out.polarity = Polarity::negative;
      skip_space();
    }
    out.label = label();
    skip_space();
    if (peek() == ':') {
      ++pos_;
      skip_space();
      const std::size_t at = pos_;
      out.weight = number("weight");
      if (out.weight < 0.0) throw ParseError(at, "weight must be nonnegative");
    }
    return out;
  }

  ConceptLabel label() {
    const std::size_t at = pos_;
    if (peek() == '@') {
      ++pos_;
      std::vector<double> values;
      for (int i = 0; i < coord_dim_; ++i) {
        if (i) {
          skip_space();
          expect(',');
        }
        skip_space();
        values.push_back(number("coordinate"));
      }
      return ConceptLabel::coord(std::move(values));
    }
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-' ||
                         peek() == '.')) {
      ++pos_;
    }
    if (pos_ == at) throw ParseError(at, "expected a concept label");
    const std::string_view name = text_.substr(at, pos_ - at);
    std::optional<ConceptLabel> resolved = resolve_ ? resolve_(name) : std::nullopt;
    if (!resolved) throw ParseError(at, "unknown concept label '" + std::string(name) + "'");
    if (resolved->is_null()) throw ParseError(at, "the null label cannot appear in a composition");
    return *resolved;
  }

  double number(const char* what) {
    const std::size_t at = pos_;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) throw ParseError(at, std::string("expected a number for the ") + what);
    if (!std::isfinite(value)) throw ParseError(at, std::string("non-finite ") + what);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  void expect(char c) {
    if (peek() != c) {
      if (at_end()) throw ParseError(pos_, std::string("expected '") + c + "' before end of input");
      throw ParseError(pos_, std::string("expected '") + c + "', found '" + peek() + "'");
    }
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  std::string_view text_;
  const LabelResolver& resolve_;
  int coord_dim_;
  std::size_t pos_ = 0;
};

}  // namespace

CompositionSpec parse_compose_spec(std::string_view text, const LabelResolver& resolve, int coord_dim) {
  if (coord_dim < 1) throw ValidationError("coordinate labels need at least one component");
  return CompositionSpec(Parser(text, resolve, coord_dim).parse());
}

std::string format_compose_spec(const CompositionSpec& spec,
                                const std::function<std::string(const ConceptLabel&)>& name) {
  std::string out;
  for (const Term& term : spec.terms()) {
    if (!out.empty()) out += ',';
    if (term.polarity == Polarity::negative) out += '~';
    if (term.label.is_coord()) {
      out += '@';
      const auto& c = term.label.coords();
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) out += ',';
        out += format_double(c[i]);
      }
    } else {
      out += name(term.label);
    }
    out += ':';
    out += format_double(term.weight);
  }
  return out;
}

}  // namespace compdiff
