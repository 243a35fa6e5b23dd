#include <doctest.h>

#include <cmath>
#include <random>

#include "zenosos/poly/parser.hpp"
#include "zenosos/poly/polynomial.hpp"

using namespace zenosos::poly;

namespace {

const VariableList kXY = {"x1", "x2"};

Monomial mono(std::initializer_list<int> e) {
  std::vector<int> v(e);
  return Monomial::from_dense(v);
}

Polynomial random_poly(std::mt19937_64& rng, const VariableList& vars, int max_deg) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::bernoulli_distribution keep(0.5);
  Polynomial::TermMap t;
  for (const auto& m : monomials_up_to(vars.size(), max_deg)) {
    if (keep(rng)) t.emplace(m, coef(rng));
  }
  return Polynomial(vars, std::move(t));
}

}  // namespace

TEST_CASE("monomial basis counts and order") {
  CHECK(monomials_up_to(2, 6).size() == 28);
  CHECK(monomials_up_to(3, 4).size() == 35);
  CHECK(monomials_up_to(2, 8).size() == 45);
  auto b = monomials_up_to(2, 2);
  REQUIRE(b.size() == 6);
  CHECK(b[0] == mono({0, 0}));
  CHECK(b[1] == mono({1, 0}));
  CHECK(b[2] == mono({0, 1}));
  CHECK(b[3] == mono({2, 0}));
  CHECK(b[4] == mono({1, 1}));
  CHECK(b[5] == mono({0, 2}));
  GradedLexLess less;
  for (std::size_t i = 1; i < b.size(); ++i) CHECK(less(b[i - 1], b[i]));
}

TEST_CASE("parse basic expressions") {
  auto p = parse("x1^2 + 2*x1*x2 + x2^2", kXY);
  CHECK(p.size() == 3);
  CHECK(p.coefficient(mono({2, 0})) == 1.0);
  CHECK(p.coefficient(mono({1, 1})) == 2.0);
  CHECK(p.coefficient(mono({0, 2})) == 1.0);
  auto q = parse("(x1+x2)^2", kXY);
  CHECK(q.terms() == p.terms());
  CHECK_THROWS_AS(parse("-g + 0.5*x2^2", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1^-2", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1^1.5", kXY), ParseError);
  CHECK_THROWS_AS(parse("x1 + * x2", kXY), ParseError);
  CHECK_THROWS_AS(parse("(x1", kXY), ParseError);
  try {
    parse("x1 + y", kXY);
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  auto r = parse("-3.5e-1*x1 - -x2 + 1E2", kXY);
  CHECK(r.coefficient(mono({1, 0})) == doctest::Approx(-0.35));
  CHECK(r.coefficient(mono({0, 1})) == 1.0);
  CHECK(r.constant_term() == 100.0);
}

TEST_CASE("evaluate") {
  auto p = parse("x1^2 + x2^2", kXY);
  std::vector<double> pt{3.0, 4.0};
  CHECK(evaluate(p, pt) == 25.0);
  CHECK(evaluate(Polynomial(kXY), pt) == 0.0);
  std::vector<double> short_pt{1.0};
  CHECK_THROWS(evaluate(p, short_pt));
  VariableList vars = {"x1", "x2", "g", "c1"};
  auto f2 = parse("-g + c1*x2^2", vars);
  auto sub = substitute(f2, {{"g", 9.8}, {"c1", 0.5}});
  CHECK(sub.variables() == kXY);
  std::vector<double> at{0.0, 2.0};
  CHECK(evaluate(sub, at) == doctest::Approx(-7.8).epsilon(1e-15));
}

TEST_CASE("arith examples") {
  auto a = parse("x1 + x2", kXY);
  auto b = parse("x1 - x2", kXY);
  CHECK((a * b).terms() == parse("x1^2 - x2^2", kXY).terms());
  CHECK((a + (-1.0) * a).is_zero());
  auto cube = a * a * a;
  CHECK(cube.coefficient(mono({3, 0})) == 1.0);
  CHECK(cube.coefficient(mono({2, 1})) == 3.0);
  CHECK(cube.coefficient(mono({1, 2})) == 3.0);
  CHECK(cube.coefficient(mono({0, 3})) == 1.0);
  CHECK(cube.degree() == 3);
  // Variable lists union in order.
  auto u = parse("x", {"x"}) + parse("y", {"y"});
  CHECK(u.variables() == VariableList{"x", "y"});
  auto tiny = parse("x1 + 1e-15", kXY);
  CHECK(tiny.size() == 1);
}

TEST_CASE("ring axioms on random polynomials") {
  std::mt19937_64 rng(7);
  const VariableList vars = {"a", "b", "c"};
  for (int i = 0; i < 200; ++i) {
    auto p = random_poly(rng, vars, 4);
    auto q = random_poly(rng, vars, 4);
    auto r = random_poly(rng, vars, 4);
    CHECK(max_coefficient_difference((p * q) * r, p * (q * r)) <= 1e-12 * 64);
    CHECK(max_coefficient_difference(p * (q + r), p * q + p * r) <= 1e-12 * 64);
    CHECK(max_coefficient_difference(p * q, q * p) <= 1e-12);
    CHECK(max_coefficient_difference(p + q, q + p) <= 1e-12);
    CHECK(max_coefficient_difference((p + q) + r, p + (q + r)) <= 1e-12);
  }
}

TEST_CASE("gradient") {
  auto g = gradient(parse("x1^2 + x2^2", kXY));
  REQUIRE(g.size() == 2);
  CHECK(g[0].terms() == parse("2*x1", kXY).terms());
  CHECK(g[1].terms() == parse("2*x2", kXY).terms());
  auto gc = gradient(Polynomial::constant(3.0, kXY));
  CHECK(gc[0].is_zero());
  CHECK(gc[1].is_zero());

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    auto p = random_poly(rng, kXY, 5);
    auto grad = gradient(p);
    std::vector<double> x{u(rng), u(rng)};
    for (std::size_t k = 0; k < 2; ++k) {
      const double h = 1e-5;
      auto xp = x;
      auto xm = x;
      xp[k] += h;
      xm[k] -= h;
      double fd = (evaluate(p, xp) - evaluate(p, xm)) / (2 * h);
      double an = evaluate(grad[k], x);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("compose") {
  VariableList vars = {"x1", "x2", "c"};
  auto p = parse("x2^2", vars);
  CHECK(compose(p, PolyVector({Polynomial(vars), parse("-c*x2", vars),
                               parse("c", vars)}))
            .terms() == parse("c^2*x2^2", vars).terms());

  auto q = parse("x1^3 - 2*x1*x2 + 5", kXY);
  PolyVector id({parse("x1", kXY), parse("x2", kXY)});
  CHECK(compose(q, id).terms() == q.terms());

  PolyVector phi({Polynomial(kXY), parse("-0.8*x2*(1 - 0.001*x2^2)", kXY)});
  auto c = compose(parse("x2", kXY), phi);
  CHECK(c.size() == 2);
  CHECK(c.coefficient(mono({0, 1})) == doctest::Approx(-0.8));
  CHECK(c.coefficient(mono({0, 3})) == doctest::Approx(0.0008));

  CHECK_THROWS(compose(q, PolyVector({parse("x1", kXY)})));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    auto base = random_poly(rng, kXY, 3);
    PolyVector s({random_poly(rng, kXY, 2), random_poly(rng, kXY, 2)});
    auto comp = compose(base, s);
    CHECK(comp.degree() <= base.degree() * 2);
    std::vector<double> x{u(rng), u(rng)};
    std::vector<double> sx{evaluate(s[0], x), evaluate(s[1], x)};
    CHECK(std::abs(evaluate(comp, x) - evaluate(base, sx)) <= 1e-9);
  }
}

TEST_CASE("print and parse round trip") {
  std::mt19937_64 rng(5);
  const VariableList vars = {"x1", "x2", "p"};
  for (int i = 0; i < 200; ++i) {
    auto p = random_poly(rng, vars, 4);
    auto back = parse(to_string(p), vars);
    CHECK(back.terms() == p.terms());
  }
  CHECK(to_string(Polynomial(kXY)) == "0");
  auto neg = parse("-x1 - 2*x2^3 + 0.1", kXY);
  CHECK(parse(to_string(neg), kXY).terms() == neg.terms());
}
