#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zenosos/poly/polynomial.hpp"

namespace zenosos::sos {

/// Raised when an expression multiplies two unknowns.
class BilinearError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Atom 0 is the constant 1; every other atom is one scalar unknown of an
/// SosProgram (a free coefficient or one Gram-matrix entry).
using AtomId = int;
inline constexpr AtomId kConstantAtom = 0;

/// Sparse linear combination of atoms.
using Row = std::map<AtomId, double>;

/// A polynomial in the program's indeterminates whose coefficients are
/// affine functions of the unknowns: sum over monomials m of m * (row_m . atoms).
class LinPoly {
 public:
  using Terms = std::map<poly::Monomial, Row, poly::GradedLexLess>;

  LinPoly() = default;
  explicit LinPoly(std::size_t nvars) : nvars_(nvars) {}
  /// Pure data (no unknowns). `p` must use only the first nvars variables of
  /// its own list, which must match the program's indeterminates.
  static LinPoly data(const poly::Polynomial& p, std::size_t nvars);
  static LinPoly atom(AtomId id, const poly::Monomial& m, double coeff, std::size_t nvars);

  std::size_t nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  bool is_data() const;
  /// Largest total degree of any monomial carrying a nonzero coefficient.
  int degree() const;
  /// Degree in the first `count` indeterminates only.
  int degree_in_prefix(std::size_t count) const;
  void add_term(const poly::Monomial& m, AtomId a, double c);

  LinPoly operator-() const;
  LinPoly& operator+=(const LinPoly& o);
  LinPoly& operator-=(const LinPoly& o);
  friend LinPoly operator+(LinPoly a, const LinPoly& b) { return a += b; }
  friend LinPoly operator-(LinPoly a, const LinPoly& b) { return a -= b; }
  friend LinPoly operator*(double s, const LinPoly& p);
  /// Product; throws BilinearError unless at least one side is pure data.
  friend LinPoly operator*(const LinPoly& a, const LinPoly& b);

  /// Polynomial value once every atom has a numeric value.
  poly::Polynomial evaluate(std::span<const double> atom_values,
                            const poly::VariableList& variables) const;

 private:
  std::size_t nvars_ = 0;
  Terms terms_;
};

/// Multiplies by a data polynomial over the same indeterminates.
LinPoly multiply(const poly::Polynomial& data, const LinPoly& p);

/// d p / d x_var
LinPoly derivative(const LinPoly& p, std::uint32_t var);

/// Replaces indeterminate i by subst[i] (one entry per indeterminate, each a
/// polynomial over the same indeterminates).
LinPoly compose(const LinPoly& p, const std::vector<poly::Polynomial>& subst);

/// Fixes some indeterminates to numeric values (index -> value).
LinPoly substitute(const LinPoly& p, const std::map<std::uint32_t, double>& values);

}  // namespace zenosos::sos
