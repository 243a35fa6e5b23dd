#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zenosos/poly/monomial.hpp"

namespace zenosos::poly {

/// Terms whose coefficient magnitude falls below this are dropped.
inline constexpr double kCanonicalEpsilon = 1e-14;

using VariableList = std::vector<std::string>;

/// Sparse multivariate polynomial with double coefficients over an ordered
/// list of named variables. Values are immutable once constructed.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLexLess>;

  Polynomial() = default;
  explicit Polynomial(VariableList variables);
  Polynomial(VariableList variables, TermMap terms);

  static Polynomial constant(double value, VariableList variables = {});
  /// The polynomial `name`; `name` is appended to `variables` if absent.
  static Polynomial variable(const std::string& name,
                             VariableList variables = {});

  const VariableList& variables() const { return variables_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  /// Total degree; the zero polynomial has degree 0.
  int degree() const;
  /// Total degree counting only the named variables.
  int degree_in(std::span<const std::string> names) const;
  double coefficient(const Monomial& m) const;
  double constant_term() const { return coefficient(Monomial{}); }
  /// Largest coefficient magnitude (0 for the zero polynomial).
  double max_abs_coefficient() const;
  /// Index of `name` in the variable list, or -1.
  int index_of(std::string_view name) const;

  /// Re-expresses the polynomial over `superset`, which must contain every
  /// variable this polynomial uses with a nonzero exponent.
  Polynomial over(const VariableList& superset) const;

  Polynomial operator-() const;
  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double s, const Polynomial& p);
  friend Polynomial operator*(const Polynomial& p, double s) { return s * p; }
  Polynomial pow(unsigned k) const;

 private:
  VariableList variables_;
  TermMap terms_;
};

/// Ordered list of polynomials sharing one variable list (a vector field or
/// a reset map).
struct PolyVector {
  std::vector<Polynomial> components;

  PolyVector() = default;
  explicit PolyVector(std::vector<Polynomial> comps);
  std::size_t size() const { return components.size(); }
  const Polynomial& operator[](std::size_t i) const { return components[i]; }
  const VariableList& variables() const;
};

/// Union of variable lists, order-stable (a's order, then b's new names).
VariableList union_variables(const VariableList& a, const VariableList& b);

/// Coefficient-wise arithmetic entry point; `op` is one of add, sub, mul.
enum class ArithOp { add, sub, mul };
Polynomial arith(const Polynomial& a, const Polynomial& b, ArithOp op);
Polynomial scale(const Polynomial& p, double s);

/// Evaluates at a point whose i-th entry is the value of variables()[i].
double evaluate(const Polynomial& p, std::span<const double> point);
/// Evaluates with values looked up by name (every used variable must be
/// present).
double evaluate(const Polynomial& p,
                const std::unordered_map<std::string, double>& values);

/// Gradient with respect to every variable of p, in variable-list order.
PolyVector gradient(const Polynomial& p);
/// Gradient with respect to the named variables only.
PolyVector gradient(const Polynomial& p, std::span<const std::string> wrt);
Polynomial derivative(const Polynomial& p, std::string_view var);

/// Replaces variable i of p by subst[i]. subst.size() must equal the number
/// of variables of p.
Polynomial compose(const Polynomial& p, const PolyVector& subst);
PolyVector compose(const PolyVector& v, const PolyVector& subst);

/// Substitutes numeric values for some variables; those variables are
/// removed from the variable list.
Polynomial substitute(const Polynomial& p,
                      const std::map<std::string, double>& values);
PolyVector substitute(const PolyVector& v,
                      const std::map<std::string, double>& values);

/// Maximum coefficient magnitude of a - b (after variable union).
double max_coefficient_difference(const Polynomial& a, const Polynomial& b);

}  // namespace zenosos::poly
