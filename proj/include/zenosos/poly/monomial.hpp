#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace zenosos::poly {

/// A power product x_{i1}^{e1} ... x_{ik}^{ek} over variable indices.
///
/// Stored sparsely: factors are sorted by variable index and never carry a
/// zero exponent, so equal monomials have identical representations.
class Monomial {
 public:
  struct Factor {
    std::uint32_t var;
    std::uint32_t exp;
    friend bool operator==(const Factor&, const Factor&) = default;
  };

  Monomial() = default;

  static Monomial variable(std::uint32_t var, std::uint32_t exp = 1);
  /// Builds from a dense exponent vector; zero entries are dropped.
  static Monomial from_dense(std::span<const int> exponents);
  /// Builds from arbitrary (var, exp) pairs; duplicates are merged.
  static Monomial from_factors(std::vector<Factor> factors);

  std::uint32_t degree() const { return degree_; }
  std::uint32_t exponent(std::uint32_t var) const;
  bool is_constant() const { return factors_.empty(); }
  std::span<const Factor> factors() const { return factors_; }
  std::vector<int> dense(std::size_t nvars) const;

  /// Largest variable index + 1, or 0 for the constant monomial.
  std::uint32_t span_size() const {
    return factors_.empty() ? 0 : factors_.back().var + 1;
  }

  Monomial operator*(const Monomial& other) const;

  /// Re-indexes variables: variable i becomes map[i].
  Monomial remapped(std::span<const std::uint32_t> map) const;

  /// Divides out one power of `var`. Returns the exponent before the
  /// division (0 when var is absent, in which case the result is undefined).
  std::uint32_t differentiate(std::uint32_t var, Monomial& out) const;

  /// Removes `var` entirely, returning its exponent.
  std::uint32_t strip(std::uint32_t var, Monomial& out) const;

  friend bool operator==(const Monomial&, const Monomial&) = default;

  std::size_t hash() const;

 private:
  std::vector<Factor> factors_;
  std::uint32_t degree_ = 0;
};

/// Graded-lexicographic order: lower total degree first; within a degree the
/// monomial with the larger exponent on the lower-indexed variable first
/// (1, x1, x2, x1^2, x1 x2, x2^2, ...).
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// All monomials in `nvars` variables of total degree <= max_degree, in
/// graded-lex order. Count is C(nvars + max_degree, max_degree).
std::vector<Monomial> monomials_up_to(std::size_t nvars, int max_degree);

/// Monomials of exactly the given degree, graded-lex order.
std::vector<Monomial> monomials_of_degree(std::size_t nvars, int degree);

}  // namespace zenosos::poly

template <>
struct std::hash<zenosos::poly::Monomial> {
  std::size_t operator()(const zenosos::poly::Monomial& m) const noexcept {
    return m.hash();
  }
};
