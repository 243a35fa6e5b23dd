#include "zenosos/sos/linpoly.hpp"

#include <algorithm>
#include <cmath>

namespace zenosos::sos {

using poly::Monomial;
using poly::Polynomial;

namespace {

void axpy(Row& dst, const Row& src, double s) {
  if (s == 0.0) return;
  for (const auto& [a, c] : src) {
    double& v = dst[a];
    v += s * c;
    if (v == 0.0) dst.erase(a);
  }
}

bool row_is_data(const Row& r) {
  for (const auto& [a, c] : r) {
    if (a != kConstantAtom && c != 0.0) return false;
  }
  return true;
}

}  // namespace

LinPoly LinPoly::data(const Polynomial& p, std::size_t nvars) {
  LinPoly out(nvars);
  for (const auto& [m, c] : p.terms()) {
    if (m.span_size() > nvars) throw std::invalid_argument("data polynomial uses extra variables");
    out.terms_[m][kConstantAtom] = c;
  }
  return out;
}

LinPoly LinPoly::atom(AtomId id, const Monomial& m, double coeff, std::size_t nvars) {
  LinPoly out(nvars);
  out.add_term(m, id, coeff);
  return out;
}

void LinPoly::add_term(const Monomial& m, AtomId a, double c) {
  if (c == 0.0) return;
  auto& row = terms_[m];
  double& v = row[a];
  v += c;
  if (v == 0.0) row.erase(a);
  if (row.empty()) terms_.erase(m);
}

bool LinPoly::is_data() const {
  for (const auto& [m, r] : terms_) {
    if (!row_is_data(r)) return false;
  }
  return true;
}

int LinPoly::degree() const {
  int d = 0;
  for (const auto& [m, r] : terms_) {
    if (!r.empty()) d = std::max(d, static_cast<int>(m.degree()));
  }
  return d;
}

int LinPoly::degree_in_prefix(std::size_t count) const {
  int d = 0;
  for (const auto& [m, r] : terms_) {
    if (r.empty()) continue;
    int k = 0;
    for (const auto& f : m.factors()) {
      if (f.var < count) k += static_cast<int>(f.exp);
    }
    d = std::max(d, k);
  }
  return d;
}

LinPoly LinPoly::operator-() const {
  LinPoly out = *this;
  for (auto& [m, r] : out.terms_) {
    for (auto& [a, c] : r) c = -c;
  }
  return out;
}

LinPoly& LinPoly::operator+=(const LinPoly& o) {
  nvars_ = std::max(nvars_, o.nvars_);
  for (const auto& [m, r] : o.terms_) {
    auto& dst = terms_[m];
    axpy(dst, r, 1.0);
    if (dst.empty()) terms_.erase(m);
  }
  return *this;
}

LinPoly& LinPoly::operator-=(const LinPoly& o) {
  nvars_ = std::max(nvars_, o.nvars_);
  for (const auto& [m, r] : o.terms_) {
    auto& dst = terms_[m];
    axpy(dst, r, -1.0);
    if (dst.empty()) terms_.erase(m);
  }
  return *this;
}

LinPoly operator*(double s, const LinPoly& p) {
  LinPoly out(p.nvars_);
  if (s == 0.0) return out;
  out.terms_ = p.terms_;
  for (auto& [m, r] : out.terms_) {
    for (auto& [a, c] : r) c *= s;
  }
  return out;
}

LinPoly operator*(const LinPoly& a, const LinPoly& b) {
  const bool ad = a.is_data();
  const bool bd = b.is_data();
  if (!ad && !bd) throw BilinearError("product of two unknown-dependent expressions");
  const LinPoly& d = ad ? a : b;
  const LinPoly& u = ad ? b : a;
  LinPoly out(std::max(a.nvars_, b.nvars_));
  for (const auto& [md, rd] : d.terms_) {
    auto it = rd.find(kConstantAtom);
    if (it == rd.end()) continue;
    const double c = it->second;
    for (const auto& [mu, ru] : u.terms_) {
      auto& dst = out.terms_[md * mu];
      axpy(dst, ru, c);
      if (dst.empty()) out.terms_.erase(md * mu);
    }
  }
  return out;
}

Polynomial LinPoly::evaluate(std::span<const double> atom_values,
                             const poly::VariableList& variables) const {
  Polynomial::TermMap t;
  for (const auto& [m, r] : terms_) {
    double s = 0.0;
    for (const auto& [a, c] : r) s += c * atom_values[a];
    t[m] += s;
  }
  return Polynomial(variables, std::move(t));
}

LinPoly multiply(const Polynomial& data, const LinPoly& p) {
  return LinPoly::data(data, p.nvars()) * p;
}

LinPoly derivative(const LinPoly& p, std::uint32_t var) {
  LinPoly out(p.nvars());
  Monomial d;
  for (const auto& [m, r] : p.terms()) {
    const std::uint32_t e = m.differentiate(var, d);
    if (e == 0) continue;
    for (const auto& [a, c] : r) out.add_term(d, a, c * e);
  }
  return out;
}

LinPoly compose(const LinPoly& p, const std::vector<Polynomial>& subst) {
  if (subst.size() != p.nvars()) throw std::invalid_argument("compose: substitution size mismatch");
  std::vector<std::vector<Polynomial>> powers(subst.size());
  auto power = [&](std::uint32_t var, std::uint32_t e) -> const Polynomial& {
    auto& cache = powers[var];
    if (cache.empty()) cache.push_back(Polynomial::constant(1.0, subst[var].variables()));
    while (cache.size() <= e) cache.push_back(cache.back() * subst[var]);
    return cache[e];
  };
  LinPoly out(p.nvars());
  for (const auto& [m, r] : p.terms()) {
    Polynomial image = Polynomial::constant(1.0, subst.empty() ? poly::VariableList{} : subst[0].variables());
    for (const auto& f : m.factors()) image = image * power(f.var, f.exp);
    for (const auto& [mm, c] : image.terms()) {
      if (mm.span_size() > p.nvars()) throw std::invalid_argument("compose: image uses extra variables");
      for (const auto& [a, rc] : r) out.add_term(mm, a, c * rc);
    }
  }
  return out;
}

LinPoly substitute(const LinPoly& p, const std::map<std::uint32_t, double>& values) {
  LinPoly out(p.nvars());
  for (const auto& [m, r] : p.terms()) {
    double scale = 1.0;
    std::vector<Monomial::Factor> keep;
    for (const auto& f : m.factors()) {
      auto it = values.find(f.var);
      if (it == values.end()) {
        keep.push_back(f);
      } else {
        scale *= std::pow(it->second, static_cast<double>(f.exp));
      }
    }
    if (scale == 0.0) continue;
    Monomial mm = Monomial::from_factors(std::move(keep));
    for (const auto& [a, c] : r) out.add_term(mm, a, c * scale);
  }
  return out;
}

}  // namespace zenosos::sos
