#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "zenosos/poly/polynomial.hpp"

namespace zenosos::poly {

/// Raised for malformed expressions; `position` is a 0-based character
/// offset into the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses a polynomial expression over the declared variables.
///
///   expr   := term (('+'|'-') term)*
///   term   := unary ('*' unary)*
///   unary  := '-' unary | factor
///   factor := base ('^' uint)?
///   base   := name | number | '(' expr ')'
///
/// Names are [A-Za-z_][A-Za-z0-9_]*; numbers are decimal literals with an
/// optional exponent part. Undeclared names are an error.
Polynomial parse(std::string_view text, const VariableList& variables);

/// Prints in the grammar above with 17 significant digits, so that
/// parse(to_string(p), p.variables()) reproduces p's term map exactly.
std::string to_string(const Polynomial& p);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace zenosos::poly
