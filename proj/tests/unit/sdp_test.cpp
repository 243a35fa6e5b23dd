#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "zenosos/sdp/problem.hpp"
#include "zenosos/sdp/solver.hpp"

using namespace zenosos::sdp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LinearConstraint row(std::vector<MatrixEntry> e, double rhs, std::vector<FreeEntry> f = {}) {
  LinearConstraint c;
  c.entries = std::move(e);
  c.free = std::move(f);
  c.rhs = rhs;
  return c;
}

// min trace(X) s.t. X11 + X22 + 2 X12 = 2, X11 - X22 = 0 over 2x2 PSD.
SdpProblem trace_problem() {
  SdpProblem p;
  p.add_block(2);
  p.constraints.push_back(row({{0, 0, 0, 1.0}, {0, 1, 1, 1.0}, {0, 0, 1, 1.0}}, 2.0));
  p.constraints.push_back(row({{0, 0, 0, 1.0}, {0, 1, 1, -1.0}}, 0.0));
  p.objective.entries = {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}};
  return p;
}

// Random problem with a known strictly feasible point and a dual-feasible
// objective, so an optimum exists.
SdpProblem random_feasible(std::mt19937_64& rng, bool with_free) {
  std::uniform_int_distribution<int> nb(1, 3);
  std::uniform_int_distribution<int> sz(1, 5);
  std::normal_distribution<double> g(0.0, 1.0);
  SdpProblem p;
  const int blocks = nb(rng);
  std::vector<MatrixXd> xs;
  std::size_t dim = 0;
  for (int k = 0; k < blocks; ++k) {
    int n = sz(rng);
    p.add_block(n);
    MatrixXd R = MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    xs.push_back(R * R.transpose() + 0.5 * MatrixXd::Identity(n, n));
    dim += n * (n + 1) / 2;
  }
  const int nf = with_free ? 2 : 0;
  p.add_free(nf);
  VectorXd xf = VectorXd::NullaryExpr(nf, [&] { return g(rng); });
  const int m = std::max<int>(1, static_cast<int>(dim) / 2);
  for (int i = 0; i < m; ++i) {
    LinearConstraint c;
    double rhs = 0.0;
    for (int k = 0; k < blocks; ++k) {
      const int n = p.block_sizes[k];
      for (int r = 0; r < n; ++r) {
        for (int cc = r; cc < n; ++cc) {
          if (std::bernoulli_distribution(0.6)(rng)) {
            double v = g(rng);
            c.entries.push_back({k, r, cc, v});
            rhs += (r == cc ? 1.0 : 2.0) * v * xs[k](r, cc);
          }
        }
      }
    }
    for (int f = 0; f < nf; ++f) {
      double v = g(rng);
      c.free.push_back({f, v});
      rhs += v * xf(f);
    }
    c.rhs = rhs;
    p.constraints.push_back(c);
  }
  // C = sum y_i A_i + I with random y, and cf = Af' y.
  VectorXd y0 = VectorXd::NullaryExpr(m, [&] { return 0.3 * g(rng); });
  for (int k = 0; k < blocks; ++k) {
    MatrixXd C = adjoint_block(p, y0, k) + MatrixXd::Identity(p.block_sizes[k], p.block_sizes[k]);
    for (int r = 0; r < C.rows(); ++r) {
      for (int cc = r; cc < C.cols(); ++cc) {
        if (C(r, cc) != 0.0) p.objective.entries.push_back({k, r, cc, C(r, cc)});
      }
    }
  }
  for (int f = 0; f < nf; ++f) {
    double v = 0.0;
    for (int i = 0; i < m; ++i) {
      for (const auto& fe : p.constraints[i].free) {
        if (fe.index == f) v += fe.value * y0(i);
      }
    }
    p.objective.free.push_back({f, v});
  }
  return p;
}

}  // namespace

TEST_CASE("sdp: 1x1 linear program") {
  SdpProblem p;
  p.add_block(1);
  p.constraints.push_back(row({{0, 0, 0, 1.0}}, 1.0));
  p.objective.entries = {{0, 0, 0, 1.0}};
  auto sol = solve(p);
  REQUIRE(sol.status == Status::optimal);
  CHECK(sol.X[0](0, 0) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("sdp: determinant infeasibility yields a verified ray") {
  SdpProblem p;
  p.add_block(2);
  p.constraints.push_back(row({{0, 0, 0, 1.0}}, 1.0));
  p.constraints.push_back(row({{0, 1, 1, 1.0}}, 1.0));
  p.constraints.push_back(row({{0, 0, 1, 0.5}}, 2.0));  // X12 = 2
  auto sol = solve(p);
  REQUIRE(sol.status == Status::infeasible_certificate);
  auto rc = verify_ray(p, sol.ray, 1e-7);
  CHECK(rc.valid);
  CHECK(rc.bty == doctest::Approx(1.0));
}

TEST_CASE("sdp: trace minimization example") {
  auto p = trace_problem();
  auto sol = solve(p);
  REQUIRE(sol.status == Status::optimal);
  CHECK(sol.residuals.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.X[0](0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.X[0](0, 1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.X[0](1, 1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("sdp: residuals of analytic solutions") {
  auto p = trace_problem();
  // Hand solution: X = [[.5,.5],[.5,.5]], y = (1/2, 0), S = I - y1*A1 =
  // [[.5,-.5],[-.5,.5]].
  SdpSolution s;
  s.X = {(MatrixXd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished()};
  s.S = {(MatrixXd(2, 2) << 0.5, -0.5, -0.5, 0.5).finished()};
  s.y = (VectorXd(2) << 0.5, 0.0).finished();
  s.xf = VectorXd(0);
  auto r = residuals(p, s);
  CHECK(r.primal <= 1e-10);
  CHECK(r.dual <= 1e-10);
  CHECK(std::abs(r.gap) <= 1e-10);

  SdpSolution zero = s;
  zero.X = {MatrixXd::Zero(2, 2)};
  CHECK(residuals(p, zero).primal == doctest::Approx(2.0));

  for (double delta : {1e-3, 1e-4}) {
    SdpSolution pert = s;
    pert.X[0] += delta * MatrixXd::Identity(2, 2);
    auto rp = residuals(p, pert);
    CHECK(rp.gap - r.gap == doctest::Approx(delta * s.S[0].trace()).epsilon(1e-9));
  }

  SdpSolution bad = s;
  bad.y = VectorXd(3);
  CHECK_THROWS(residuals(p, bad));
}

TEST_CASE("sdp: free variables") {
  // min t s.t. t - X = 0, X = 3 (X 1x1 PSD, t free)
  SdpProblem p;
  p.add_block(1);
  p.add_free(1);
  p.constraints.push_back(row({{0, 0, 0, -1.0}}, 0.0, {{0, 1.0}}));
  p.constraints.push_back(row({{0, 0, 0, 1.0}}, 3.0));
  p.objective.free = {{0, 1.0}};
  auto sol = solve(p);
  REQUIRE(sol.status == Status::optimal);
  CHECK(sol.xf(0) == doctest::Approx(3.0).epsilon(1e-7));
  // Row with only a free variable.
  SdpProblem q = p;
  q.constraints.push_back(row({}, 3.0, {{0, 2.0}}));
  q.constraints[2].free = {{0, 1.0}};
  auto s2 = solve(q);
  REQUIRE(s2.status == Status::optimal);
  CHECK(s2.xf(0) == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("sdp: empty row with nonzero rhs is infeasible") {
  SdpProblem p;
  p.add_block(1);
  p.constraints.push_back(row({{0, 0, 0, 1.0}}, 1.0));
  p.constraints.push_back(row({}, 2.0));
  auto sol = solve(p);
  CHECK(sol.status == Status::infeasible_certificate);
  CHECK(verify_ray(p, sol.ray, 1e-12).valid);
}

TEST_CASE("sdp: random feasible problems, weak duality, determinism") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 50; ++t) {
    auto p = random_feasible(rng, t % 2 == 1);
    auto sol = solve(p);
    INFO("problem " << t << " message " << sol.message);
    REQUIRE(sol.status == Status::optimal);
    CHECK(sol.residuals.gap_relative <= 1e-7);
    CHECK(sol.residuals.primal_objective >= sol.residuals.dual_objective - 1e-8 *
          (1.0 + std::abs(sol.residuals.primal_objective)));
    if (t < 5) {
      auto again = solve(p);
      CHECK(again.iterations == sol.iterations);
      CHECK((again.y - sol.y).norm() == 0.0);
      CHECK((again.X[0] - sol.X[0]).norm() == 0.0);
    }
  }
}

TEST_CASE("sdp: status is invariant to row scaling") {
  std::vector<SdpProblem> suite;
  suite.push_back(trace_problem());
  {
    SdpProblem p;
    p.add_block(2);
    p.constraints.push_back(row({{0, 0, 0, 1.0}}, 1.0));
    p.constraints.push_back(row({{0, 1, 1, 1.0}}, 1.0));
    p.constraints.push_back(row({{0, 0, 1, 0.5}}, 2.0));
    suite.push_back(p);
  }
  std::mt19937_64 rng(99);
  for (int i = 0; i < 5; ++i) suite.push_back(random_feasible(rng, i % 2 == 0));
  for (const auto& p : suite) {
    SdpProblem q = p;
    for (auto& c : q.constraints) {
      for (auto& e : c.entries) e.value *= 10.0;
      for (auto& f : c.free) f.value *= 10.0;
      c.rhs *= 10.0;
    }
    CHECK(solve(p).status == solve(q).status);
  }
}

TEST_CASE("sdp: sparse text dump round trip") {
  auto p = trace_problem();
  p.add_free(1);
  p.constraints[0].free.push_back({0, 0.25});
  std::stringstream ss;
  write_sparse(ss, p);
  auto q = read_sparse(ss);
  CHECK(q.block_sizes == p.block_sizes);
  CHECK(q.free_count == 1);
  REQUIRE(q.constraints.size() == 2);
  CHECK(q.constraints[0].entries.size() == 3);
  CHECK(q.constraints[0].free.size() == 1);
  CHECK(q.constraints[0].rhs == 2.0);
  CHECK(q.objective.entries.size() == 2);
}

TEST_CASE("sdp: malformed problems are rejected") {
  SdpProblem p;
  p.add_block(2);
  p.constraints.push_back(row({{0, 1, 0, 1.0}}, 1.0));
  CHECK_THROWS(solve(p));
  SdpProblem q;
  q.add_block(2);
  CHECK_THROWS(solve(q));
}
