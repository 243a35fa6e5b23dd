#include "zenosos/poly/monomial.hpp"

#include <algorithm>
#include <stdexcept>

namespace zenosos::poly {

Monomial Monomial::variable(std::uint32_t var, std::uint32_t exp) {
  Monomial m;
  if (exp > 0) {
    m.factors_.push_back({var, exp});
    m.degree_ = exp;
  }
  return m;
}

Monomial Monomial::from_dense(std::span<const int> exponents) {
  Monomial m;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] < 0) throw std::invalid_argument("negative exponent");
    if (exponents[i] == 0) continue;
    m.factors_.push_back({static_cast<std::uint32_t>(i),
                          static_cast<std::uint32_t>(exponents[i])});
    m.degree_ += static_cast<std::uint32_t>(exponents[i]);
  }
  return m;
}

Monomial Monomial::from_factors(std::vector<Factor> factors) {
  std::sort(factors.begin(), factors.end(),
            [](const Factor& a, const Factor& b) { return a.var < b.var; });
  Monomial m;
  for (const auto& f : factors) {
    if (f.exp == 0) continue;
    if (!m.factors_.empty() && m.factors_.back().var == f.var) {
      m.factors_.back().exp += f.exp;
    } else {
      m.factors_.push_back(f);
    }
    m.degree_ += f.exp;
  }
  return m;
}

std::uint32_t Monomial::exponent(std::uint32_t var) const {
  for (const auto& f : factors_) {
    if (f.var == var) return f.exp;
    if (f.var > var) break;
  }
  return 0;
}

std::vector<int> Monomial::dense(std::size_t nvars) const {
  std::vector<int> out(nvars, 0);
  for (const auto& f : factors_) {
    if (f.var >= nvars) throw std::out_of_range("monomial variable index");
    out[f.var] = static_cast<int>(f.exp);
  }
  return out;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial m;
  m.factors_.reserve(factors_.size() + other.factors_.size());
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->var < b->var)) {
      m.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->var < a->var) {
      m.factors_.push_back(*b++);
    } else {
      m.factors_.push_back({a->var, a->exp + b->exp});
      ++a;
      ++b;
    }
  }
  m.degree_ = degree_ + other.degree_;
  return m;
}

Monomial Monomial::remapped(std::span<const std::uint32_t> map) const {
  std::vector<Factor> fs;
  fs.reserve(factors_.size());
  for (const auto& f : factors_) fs.push_back({map[f.var], f.exp});
  return from_factors(std::move(fs));
}

std::uint32_t Monomial::differentiate(std::uint32_t var, Monomial& out) const {
  out = *this;
  for (auto it = out.factors_.begin(); it != out.factors_.end(); ++it) {
    if (it->var != var) continue;
    const std::uint32_t e = it->exp;
    if (--it->exp == 0) out.factors_.erase(it);
    out.degree_ -= 1;
    return e;
  }
  return 0;
}

std::uint32_t Monomial::strip(std::uint32_t var, Monomial& out) const {
  out = *this;
  for (auto it = out.factors_.begin(); it != out.factors_.end(); ++it) {
    if (it->var != var) continue;
    const std::uint32_t e = it->exp;
    out.factors_.erase(it);
    out.degree_ -= e;
    return e;
  }
  return 0;
}

std::size_t Monomial::hash() const {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (const auto& f : factors_) {
    h ^= (static_cast<std::size_t>(f.var) << 32 | f.exp) + 0x9e3779b97f4a7c15ULL +
         (h << 6) + (h >> 2);
  }
  return h;
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  auto fa = a.factors();
  auto fb = b.factors();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < fa.size() || j < fb.size()) {
    // Compare the exponent on the smallest variable index where they differ.
    std::uint32_t va = i < fa.size() ? fa[i].var : UINT32_MAX;
    std::uint32_t vb = j < fb.size() ? fb[j].var : UINT32_MAX;
    std::uint32_t v = std::min(va, vb);
    std::uint32_t ea = va == v ? fa[i].exp : 0;
    std::uint32_t eb = vb == v ? fb[j].exp : 0;
    if (ea != eb) return ea > eb;
    if (va == v) ++i;
    if (vb == v) ++j;
  }
  return false;
}

namespace {

void enumerate_degree(std::size_t nvars, std::size_t var, int remaining,
                      std::vector<int>& exps, std::vector<Monomial>& out) {
  if (var + 1 == nvars) {
    exps[var] = remaining;
    out.push_back(Monomial::from_dense(exps));
    exps[var] = 0;
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    exps[var] = e;
    enumerate_degree(nvars, var + 1, remaining - e, exps, out);
  }
  exps[var] = 0;
}

}  // namespace

std::vector<Monomial> monomials_of_degree(std::size_t nvars, int degree) {
  std::vector<Monomial> out;
  if (degree < 0) return out;
  if (nvars == 0) {
    if (degree == 0) out.emplace_back();
    return out;
  }
  std::vector<int> exps(nvars, 0);
  enumerate_degree(nvars, 0, degree, exps, out);
  return out;
}

std::vector<Monomial> monomials_up_to(std::size_t nvars, int max_degree) {
  std::vector<Monomial> out;
  for (int d = 0; d <= max_degree; ++d) {
    auto layer = monomials_of_degree(nvars, d);
    out.insert(out.end(), layer.begin(), layer.end());
  }
  return out;
}

}  // namespace zenosos::poly
