#include "zenosos/poly/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zenosos::poly {

namespace {

void drop_small(Polynomial::TermMap& terms) {
  std::erase_if(terms, [](const auto& kv) {
    return std::isfinite(kv.second) && std::abs(kv.second) < kCanonicalEpsilon;
  });
}

}  // namespace

Polynomial::Polynomial(VariableList variables) : variables_(std::move(variables)) {}

Polynomial::Polynomial(VariableList variables, TermMap terms)
    : variables_(std::move(variables)), terms_(std::move(terms)) {
  for (const auto& [m, c] : terms_) {
    if (m.span_size() > variables_.size()) {
      throw std::out_of_range("monomial refers to an undeclared variable");
    }
  }
  drop_small(terms_);
}

Polynomial Polynomial::constant(double value, VariableList variables) {
  TermMap t;
  t.emplace(Monomial{}, value);
  return Polynomial(std::move(variables), std::move(t));
}

Polynomial Polynomial::variable(const std::string& name, VariableList variables) {
  auto it = std::find(variables.begin(), variables.end(), name);
  std::uint32_t idx;
  if (it == variables.end()) {
    idx = static_cast<std::uint32_t>(variables.size());
    variables.push_back(name);
  } else {
    idx = static_cast<std::uint32_t>(it - variables.begin());
  }
  TermMap t;
  t.emplace(Monomial::variable(idx), 1.0);
  return Polynomial(std::move(variables), std::move(t));
}

int Polynomial::degree() const {
  return terms_.empty() ? 0 : static_cast<int>(terms_.rbegin()->first.degree());
}

int Polynomial::degree_in(std::span<const std::string> names) const {
  std::vector<std::uint32_t> idx;
  for (const auto& n : names) {
    int i = index_of(n);
    if (i >= 0) idx.push_back(static_cast<std::uint32_t>(i));
  }
  int best = 0;
  for (const auto& [m, c] : terms_) {
    int d = 0;
    for (auto i : idx) d += static_cast<int>(m.exponent(i));
    best = std::max(best, d);
  }
  return best;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double best = 0.0;
  for (const auto& [m, c] : terms_) best = std::max(best, std::abs(c));
  return best;
}

int Polynomial::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Polynomial Polynomial::over(const VariableList& superset) const {
  if (superset == variables_) return *this;
  std::vector<std::uint32_t> map(variables_.size(), UINT32_MAX);
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    auto it = std::find(superset.begin(), superset.end(), variables_[i]);
    if (it != superset.end()) map[i] = static_cast<std::uint32_t>(it - superset.begin());
  }
  TermMap out;
  for (const auto& [m, c] : terms_) {
    for (const auto& f : m.factors()) {
      if (map[f.var] == UINT32_MAX) {
        throw std::invalid_argument("variable '" + variables_[f.var] +
                                    "' missing from target variable list");
      }
    }
    out.emplace(m.remapped(map), c);
  }
  Polynomial p(superset);
  p.terms_ = std::move(out);
  return p;
}

Polynomial Polynomial::operator-() const {
  Polynomial p = *this;
  for (auto& [m, c] : p.terms_) c = -c;
  return p;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  return arith(a, b, ArithOp::add);
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
  return arith(a, b, ArithOp::sub);
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  return arith(a, b, ArithOp::mul);
}

Polynomial operator*(double s, const Polynomial& p) { return scale(p, s); }

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial result = constant(1.0, variables_);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1U) result = result * base;
    k >>= 1U;
    if (k > 0) base = base * base;
  }
  return result;
}

PolyVector::PolyVector(std::vector<Polynomial> comps) : components(std::move(comps)) {
  if (components.empty()) return;
  VariableList vars = components.front().variables();
  for (const auto& c : components) vars = union_variables(vars, c.variables());
  for (auto& c : components) c = c.over(vars);
}

const VariableList& PolyVector::variables() const {
  static const VariableList empty;
  return components.empty() ? empty : components.front().variables();
}

VariableList union_variables(const VariableList& a, const VariableList& b) {
  VariableList out = a;
  for (const auto& n : b) {
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  }
  return out;
}

Polynomial arith(const Polynomial& a, const Polynomial& b, ArithOp op) {
  const bool same = a.variables() == b.variables();
  VariableList vars = same ? a.variables() : union_variables(a.variables(), b.variables());
  const Polynomial& pa = a;
  Polynomial pb_storage;
  const Polynomial* pb = &b;
  if (!same) {
    pb_storage = b.over(vars);
    pb = &pb_storage;
  }
  // a's variables form a prefix of the union, so its monomials need no remap.
  Polynomial::TermMap out;
  if (op == ArithOp::mul) {
    for (const auto& [ma, ca] : pa.terms()) {
      for (const auto& [mb, cb] : pb->terms()) {
        out[ma * mb] += ca * cb;
      }
    }
  } else {
    out = pa.terms();
    const double sign = op == ArithOp::add ? 1.0 : -1.0;
    for (const auto& [m, c] : pb->terms()) out[m] += sign * c;
  }
  return Polynomial(std::move(vars), std::move(out));
}

Polynomial scale(const Polynomial& p, double s) {
  Polynomial::TermMap out;
  for (const auto& [m, c] : p.terms()) out.emplace(m, s * c);
  return Polynomial(p.variables(), std::move(out));
}

double evaluate(const Polynomial& p, std::span<const double> point) {
  if (point.size() < p.variables().size()) {
    throw std::invalid_argument("evaluation point has too few entries");
  }
  double sum = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double t = c;
    for (const auto& f : m.factors()) {
      double x = point[f.var];
      double v = 1.0;
      for (std::uint32_t k = 0; k < f.exp; ++k) v *= x;
      t *= v;
    }
    sum += t;
  }
  return sum;
}

double evaluate(const Polynomial& p,
                const std::unordered_map<std::string, double>& values) {
  std::vector<double> point(p.variables().size(), 0.0);
  std::vector<bool> used(p.variables().size(), false);
  for (const auto& [m, c] : p.terms()) {
    for (const auto& f : m.factors()) used[f.var] = true;
  }
  for (std::size_t i = 0; i < point.size(); ++i) {
    auto it = values.find(p.variables()[i]);
    if (it != values.end()) {
      point[i] = it->second;
    } else if (used[i]) {
      throw std::invalid_argument("no value for variable '" + p.variables()[i] + "'");
    }
  }
  return evaluate(p, point);
}

PolyVector gradient(const Polynomial& p) {
  return gradient(p, p.variables());
}

PolyVector gradient(const Polynomial& p, std::span<const std::string> wrt) {
  std::vector<Polynomial> comps;
  comps.reserve(wrt.size());
  for (const auto& name : wrt) comps.push_back(derivative(p, name));
  PolyVector out;
  out.components = std::move(comps);
  return out;
}

Polynomial derivative(const Polynomial& p, std::string_view var) {
  int idx = p.index_of(var);
  if (idx < 0) return Polynomial(p.variables());
  Polynomial::TermMap out;
  Monomial d;
  for (const auto& [m, c] : p.terms()) {
    std::uint32_t e = m.differentiate(static_cast<std::uint32_t>(idx), d);
    if (e == 0) continue;
    out[d] += c * e;
  }
  return Polynomial(p.variables(), std::move(out));
}

Polynomial compose(const Polynomial& p, const PolyVector& subst) {
  if (subst.size() != p.variables().size()) {
    throw std::invalid_argument("compose: substitution size mismatch");
  }
  const VariableList& vars = subst.variables();
  // Cache powers of each substituted component.
  std::vector<std::vector<Polynomial>> powers(subst.size());
  auto power = [&](std::uint32_t var, std::uint32_t e) -> const Polynomial& {
    auto& cache = powers[var];
    if (cache.empty()) cache.push_back(Polynomial::constant(1.0, vars));
    while (cache.size() <= e) cache.push_back(cache.back() * subst[var]);
    return cache[e];
  };
  Polynomial result(vars);
  for (const auto& [m, c] : p.terms()) {
    Polynomial t = Polynomial::constant(c, vars);
    for (const auto& f : m.factors()) t = t * power(f.var, f.exp);
    result = result + t;
  }
  return result;
}

PolyVector compose(const PolyVector& v, const PolyVector& subst) {
  std::vector<Polynomial> comps;
  comps.reserve(v.size());
  for (const auto& c : v.components) comps.push_back(compose(c, subst));
  return PolyVector(std::move(comps));
}

Polynomial substitute(const Polynomial& p, const std::map<std::string, double>& values) {
  const auto& vars = p.variables();
  VariableList kept;
  std::vector<std::uint32_t> map(vars.size(), UINT32_MAX);
  std::vector<double> value(vars.size(), 0.0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto it = values.find(vars[i]);
    if (it != values.end()) {
      value[i] = it->second;
    } else {
      map[i] = static_cast<std::uint32_t>(kept.size());
      kept.push_back(vars[i]);
    }
  }
  Polynomial::TermMap out;
  for (const auto& [m, c] : p.terms()) {
    double coeff = c;
    std::vector<Monomial::Factor> fs;
    for (const auto& f : m.factors()) {
      if (map[f.var] == UINT32_MAX) {
        coeff *= std::pow(value[f.var], static_cast<double>(f.exp));
      } else {
        fs.push_back({map[f.var], f.exp});
      }
    }
    out[Monomial::from_factors(std::move(fs))] += coeff;
  }
  return Polynomial(std::move(kept), std::move(out));
}

PolyVector substitute(const PolyVector& v, const std::map<std::string, double>& values) {
  std::vector<Polynomial> comps;
  for (const auto& c : v.components) comps.push_back(substitute(c, values));
  return PolyVector(std::move(comps));
}

double max_coefficient_difference(const Polynomial& a, const Polynomial& b) {
  return (a - b).max_abs_coefficient();
}

}  // namespace zenosos::poly
