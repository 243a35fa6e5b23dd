// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--long] [criterion ...]
// Without criterion numbers every criterion runs. --long (or a build with
// ZENOSOS_LONG_TESTS) adds the degree 10 and 12 bisections of criterion 3.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "zenosos/hybrid/simulate.hpp"
#include "zenosos/hybrid/system.hpp"
#include "zenosos/poly/parser.hpp"
#include "zenosos/sdp/solver.hpp"
#include "zenosos/sos/program.hpp"
#include "zenosos/zeno/studies.hpp"
#include "zenosos/zeno/synthesis.hpp"

using namespace zenosos;
using zeno::Outcome;
using zeno::PointVerdict;

namespace {

#ifdef ZENOSOS_LONG_TESTS
bool g_long = true;
#else
bool g_long = false;
#endif

// Identity residuals of every certificate produced in this process.
std::vector<std::pair<std::string, double>> g_residuals;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sys_path(const std::string& name) { return std::string(ZENOSOS_SYSTEMS_DIR) + "/" + name; }

hybrid::HybridSystem load(const std::string& name, const std::map<std::string, double>& set = {}) {
  auto sys = hybrid::load_system_file(sys_path(name));
  return set.empty() ? sys : hybrid::reinstantiate(sys, set);
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

zeno::VerifyResult run_verify(const std::string& label, const hybrid::HybridSystem& sys,
                              const zeno::SynthesisConfig& cfg) {
  auto res = zeno::verify(sys, cfg);
  if (res.certificate) g_residuals.emplace_back(label, res.certificate->max_identity_residual);
  return res;
}

void note(const std::string& text) { std::printf("  %s\n", text.c_str()); }

Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  auto sys = load("example1.json");
  zeno::SynthesisConfig cfg;
  cfg.degree = 6;
  cfg.post_samples = 10000;
  cfg.cert_margin = 1e-6;
  auto res = run_verify("example1 degree 6", sys, cfg);
  const double secs = seconds_since(t0);
  if (res.outcome != Outcome::certified) {
    return {false, "example 1 at degree 6: " + zeno::to_string(res.outcome) + " after " + fmt(secs) + " s"};
  }
  const auto& cert = *res.certificate;
  // Fresh sample set, independent of the one used inside verify.
  auto cfg2 = cfg;
  cfg2.seed = 20240611;
  auto rep = zeno::post_verify(sys, cert, 10000, cfg2);
  note("c = (" + fmt(sys.constants.at("c1")) + ", " + fmt(sys.constants.at("c2")) + ", " +
       fmt(sys.constants.at("c3")) + "), alpha " + fmt(cert.alpha) + ", gamma " + fmt(cert.gamma) + ", r " +
       fmt(cert.r.at("1")));
  note("resample: " + std::to_string(rep.samples) + " points, " + std::to_string(rep.guard_samples) +
       " guard points, worst positivity " + fmt(rep.worst_positivity) + ", worst decrease " +
       fmt(rep.worst_decrease) + ", worst reset " + fmt(rep.worst_reset) + ", |V(z)| " + fmt(rep.worst_zero));
  const bool ok = cert.sampling.passed && cert.sampling.violations == 0 && cert.sampling.samples >= 10000 &&
                  rep.passed && rep.violations == 0 && rep.samples >= 10000 && secs <= 60.0;
  return {ok, "certified at degree 6; " + std::to_string(cert.sampling.violations + rep.violations) +
                  " violations beyond 1e-6 over 2 x 10^4 samples; " + fmt(secs) + " s (limit 60 s)"};
}

Verdict criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  auto sys = load("example4.json");
  zeno::SynthesisConfig cfg;
  cfg.degree = 4;
  zeno::BisectOptions opts;
  opts.name = "C";
  opts.lo = 0.5;
  opts.hi = 1.5;
  opts.direction = zeno::Direction::maximize;
  opts.tol = 0.01;
  auto res = zeno::bisect(sys, cfg, opts);
  const double secs = seconds_since(t0);
  for (const auto& p : res.probes) note("C = " + fmt(p.value, 6) + ": " + zeno::to_string(p.verdict));
  for (const auto& n : res.notes) note(n);
  const bool ok = res.established && res.monotone && res.bound >= 0.95 && secs <= 600.0;
  return {ok, "maximized C at degree 4: " + (res.established ? fmt(res.bound, 6) : std::string("none")) +
                  " (need >= 0.95); " + fmt(secs) + " s (limit 600 s)"};
}

zeno::BisectResult example5_bound(int degree, double lo, double hi) {
  auto sys = load("example5.json");
  zeno::SynthesisConfig cfg;
  cfg.degree = degree;
  zeno::BisectOptions opts;
  opts.name = "C";
  opts.lo = lo;
  opts.hi = hi;
  opts.direction = zeno::Direction::minimize;
  opts.tol = 0.05;
  return zeno::bisect(sys, cfg, opts);
}

Verdict criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  // Feasibility grows with C, so bound(8) <= 2.6 needs a certificate at C = 2.6.
  auto sys = load("example5.json", {{"C", 2.6}});
  zeno::SynthesisConfig cfg;
  cfg.degree = 8;
  auto probe = run_verify("example5 degree 8 C=2.6", sys, cfg);
  note("degree 8, C = 2.6: " + zeno::to_string(probe.outcome) + " (" + fmt(seconds_since(t0)) + " s)");
  for (const auto& a : probe.attempts) {
    std::string rs;
    for (const auto& [q, r] : a.r) rs += " " + q + "=" + fmt(r);
    note("  r" + rs + ": " + sos::to_string(a.verdict) + ", " + a.sdp_status + (a.note.empty() ? "" : ", " + a.note));
  }
  if (probe.outcome != Outcome::certified) {
    return {false, "no certificate at degree 8 for C = 2.6, so bound(8) is not in [1.7, 2.6]"};
  }
  auto b8 = example5_bound(8, 1.0, 2.6);
  note("bound(8) = " + (b8.established ? fmt(b8.bound) : std::string("none")));
  const bool window = b8.established && b8.bound >= 1.7 && b8.bound <= 2.6;
  if (!g_long) {
    return {false, "bound(8) = " + fmt(b8.bound) + (window ? " in" : " outside") +
                       " [1.7, 2.6]; degree 10/12 trend not run (needs --long or ZENOSOS_LONG_TESTS)"};
  }
  auto b10 = example5_bound(10, 1.0, b8.bound + 0.5);
  note("bound(10) = " + (b10.established ? fmt(b10.bound) : std::string("none")));
  bool trend = window && b10.established && b8.bound > b10.bound;
  std::string detail = "bound(8) " + fmt(b8.bound) + " > bound(10) " + fmt(b10.bound);
  const double elapsed = seconds_since(t0);
  if (elapsed < 3600.0) {
    auto b12 = example5_bound(12, 0.5, b10.bound + 0.5);
    note("bound(12) = " + (b12.established ? fmt(b12.bound) : std::string("none")));
    trend = trend && b12.established && b10.bound > b12.bound;
    detail += " > bound(12) " + fmt(b12.bound);
  } else {
    detail += "; degree 12 skipped after " + fmt(elapsed) + " s";
  }
  return {trend, detail};
}

Verdict criterion4() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"example2.json", "example3.json"}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto sys = load(name);
    zeno::SynthesisConfig cfg;
    cfg.degree = 8;
    auto res = run_verify(std::string(name) + " degree 8", sys, cfg);
    for (const auto& a : res.attempts) {
      std::string rs;
      for (const auto& [q, r] : a.r) rs += " " + q + "=" + fmt(r);
      note(std::string(name) + " r" + rs + ": " + sos::to_string(a.verdict) + ", " + a.sdp_status);
    }
    ok = ok && res.outcome == Outcome::certified;
    detail += std::string(detail.empty() ? "" : "; ") + name + " " + zeno::to_string(res.outcome) + " (" +
              fmt(seconds_since(t0)) + " s)";
  }
  return {ok, "degree 8: " + detail};
}

Verdict criterion5() {
  auto base = load("classical_ball.json", {{"g", 1.0}});
  bool ok = true;
  std::string detail;
  for (double c : {0.3, 0.5, 0.8}) {
    auto sys = hybrid::reinstantiate(base, {{"c", c}});
    auto ex = hybrid::simulate(sys, "1", {1.0, 0.0});
    const double expect = std::sqrt(2.0) * (1 + c) / (1 - c);
    const double got = ex.zeno_time_estimate.value_or(std::nan(""));
    const double rel = std::abs(got - expect) / expect;
    ok = ok && ex.verdict == hybrid::SimVerdict::zeno_detected && rel <= 0.01;
    detail += (detail.empty() ? "" : "; ") + std::string("c=") + fmt(c) + " " + fmt(got, 8) + " vs " +
              fmt(expect, 8) + " (rel " + fmt(rel, 2) + ")";
  }
  return {ok, detail};
}

Verdict criterion6() {
  auto sys = load("classical_ball.json", {{"c", 1.1}, {"g", 1.0}});
  bool ok = true;
  std::string detail;
  for (int degree : {2, 4, 6, 8}) {
    zeno::SynthesisConfig cfg;
    cfg.degree = degree;
    auto res = run_verify("restitution 1.1", sys, cfg);
    ok = ok && res.outcome != Outcome::certified;
    detail += (detail.empty() ? "" : ", ") + std::string("deg ") + std::to_string(degree) + " " +
              zeno::to_string(res.outcome);
  }
  hybrid::SimOptions opts;
  opts.horizon = 200.0;
  opts.stop_on_neighborhood_exit = false;
  auto ex = hybrid::simulate(sys, "1", {1.0, 0.0}, {}, opts);
  const auto tau = ex.transition_times();
  std::vector<double> gaps;
  for (std::size_t k = 1; k < tau.size(); ++k) gaps.push_back(tau[k] - tau[k - 1]);
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < gaps.size(); ++k) min_ratio = std::min(min_ratio, gaps[k] / gaps[k - 1]);
  const bool growing = gaps.size() >= 3 && min_ratio >= 1.0;
  ok = ok && growing && ex.verdict != hybrid::SimVerdict::zeno_detected;
  detail += "; simulation " + hybrid::to_string(ex.verdict) + ", " + std::to_string(gaps.size()) +
            " gaps, smallest successive ratio " + fmt(min_ratio, 6) + " (energy argument: 1.1)";
  return {ok, detail};
}

// Random SDP with a strictly feasible primal point and a dual-feasible objective.
sdp::SdpProblem random_sdp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nb(1, 3);
  std::uniform_int_distribution<int> sz(1, 5);
  std::normal_distribution<double> g(0.0, 1.0);
  sdp::SdpProblem p;
  const int blocks = nb(rng);
  std::vector<Eigen::MatrixXd> xs;
  std::size_t dim = 0;
  for (int k = 0; k < blocks; ++k) {
    const int n = sz(rng);
    p.add_block(n);
    Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    xs.push_back(R * R.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n));
    dim += n * (n + 1) / 2;
  }
  const int m = std::max<int>(1, static_cast<int>(dim) / 2);
  for (int i = 0; i < m; ++i) {
    sdp::LinearConstraint c;
    double rhs = 0.0;
    for (int k = 0; k < blocks; ++k) {
      const int n = p.block_sizes[k];
      for (int r = 0; r < n; ++r) {
        for (int cc = r; cc < n; ++cc) {
          if (std::bernoulli_distribution(0.6)(rng)) {
            const double v = g(rng);
            c.entries.push_back({k, r, cc, v});
            rhs += (r == cc ? 1.0 : 2.0) * v * xs[k](r, cc);
          }
        }
      }
    }
    c.rhs = rhs;
    p.constraints.push_back(c);
  }
  Eigen::VectorXd y0 = Eigen::VectorXd::NullaryExpr(m, [&] { return 0.3 * g(rng); });
  for (int k = 0; k < blocks; ++k) {
    Eigen::MatrixXd C = sdp::adjoint_block(p, y0, k) +
                        Eigen::MatrixXd::Identity(p.block_sizes[k], p.block_sizes[k]);
    for (int r = 0; r < C.rows(); ++r) {
      for (int cc = r; cc < C.cols(); ++cc) {
        if (C(r, cc) != 0.0) p.objective.entries.push_back({k, r, cc, C(r, cc)});
      }
    }
  }
  return p;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Verdict criterion7() {
  std::vector<std::string> failures;
  auto require = [&](bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  };

  // SOS round trip on random Gram constructions.
  {
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> nv(1, 3);
    std::uniform_int_distribution<int> hd(1, 2);
    int ok = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const int n = nv(rng);
      poly::VariableList vars;
      for (int i = 0; i < n; ++i) vars.push_back("y" + std::to_string(i));
      auto basis = sos::MonomialBasis::up_to(n, hd(rng));
      const int k = static_cast<int>(basis.size());
      Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(k, k, [&] { return g(rng); });
      auto p = sos::gram_polynomial(basis, R * R.transpose(), vars);
      auto res = sos::check_sos(p);
      // Independent reconstruction from the returned Gram matrix.
      const double err = poly::max_coefficient_difference(sos::gram_polynomial(res.basis, res.gram, vars), p);
      worst = std::max(worst, err);
      if (res.outcome == sos::SosCheck::Outcome::sos && err <= 1e-7) ++ok;
    }
    note("Gram round trip: " + std::to_string(ok) + "/100 within 1e-7 (worst " + fmt(worst, 3) + ")");
    require(ok == 100, "Gram round trip");
  }

  // Motzkin form.
  {
    auto m = sos::check_sos(poly::parse("x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1", {"x", "y"}));
    note("Motzkin: " + sos::to_string(m.outcome) + ", dual ray " + (m.ray_verified ? "verified" : "not verified"));
    require(m.outcome == sos::SosCheck::Outcome::not_sos && m.ray_verified, "Motzkin rejection");
  }

  // Weak duality and determinism on the regression set.
  {
    std::vector<std::pair<std::string, sdp::SdpProblem>> set;
    std::mt19937_64 rng(99);
    for (int k = 0; k < 12; ++k) set.emplace_back("random " + std::to_string(k), random_sdp(rng));
    zeno::SynthesisConfig cfg;
    cfg.degree = 4;
    set.emplace_back("classical ball FP", zeno::build_fp1(load("classical_ball.json"), cfg, {{"1", 0.9}})
                                              .program.compile()
                                              .problem);
    set.emplace_back("example 4 FP", zeno::build_fp2(load("example4.json"), cfg, {{"1", 0.9}}).program.compile().problem);
    cfg.degree = 6;
    set.emplace_back("example 1 FP", zeno::build_fp1(load("example1.json"), cfg, {{"1", 0.999}}).program.compile().problem);
    int optimal = 0;
    int deterministic = 0;
    double worst_duality = 0.0;
    for (const auto& [name, prob] : set) {
      auto a = sdp::solve(prob);
      auto b = sdp::solve(prob);
      const bool same = a.status == b.status && a.iterations == b.iterations && a.y == b.y && a.xf == b.xf;
      if (same) ++deterministic;
      require(same, "determinism on " + name);
      if (a.status != sdp::Status::optimal) continue;
      ++optimal;
      // <X, S> >= 0 for PSD pairs, and pobj - dobj = <X, S> up to the residuals.
      double xs = 0.0;
      double min_x = 0.0;
      double min_s = 0.0;
      for (std::size_t k = 0; k < a.X.size(); ++k) {
        xs += a.X[k].cwiseProduct(a.S[k]).sum();
        min_x = std::min(min_x, min_eigenvalue(a.X[k]));
        min_s = std::min(min_s, min_eigenvalue(a.S[k]));
      }
      const auto& r = a.residuals;
      const double scale = 1.0 + std::abs(r.primal_objective) + std::abs(r.dual_objective);
      const double duality = (r.primal_objective - r.dual_objective) / scale;
      worst_duality = std::min(worst_duality, duality);
      require(duality >= -1e-6, "weak duality on " + name);
      require(xs >= -1e-8 * scale && min_x >= -1e-8 && min_s >= -1e-8, "cone membership on " + name);
    }
    note("SDP regression set: " + std::to_string(set.size()) + " problems, " + std::to_string(optimal) +
         " optimal, " + std::to_string(deterministic) + " bit-identical on re-solve, most negative relative " +
         "pobj - dobj " + fmt(worst_duality, 3));
  }

  // FP1/FP2 agreement on parameter-free systems.
  {
    int agree = 0;
    int total = 0;
    struct Case {
      const char* file;
      std::map<std::string, double> set;
      int degree;
    };
    for (const auto& c : {Case{"classical_ball.json", {{"c", 0.5}}, 4}, Case{"classical_ball.json", {{"c", 1.1}}, 4},
                          Case{"example1.json", {}, 6}, Case{"example1.json", {{"c2", 1.1}}, 6}}) {
      auto sys = load(c.file, c.set);
      zeno::SynthesisConfig cfg;
      cfg.degree = c.degree;
      for (double r : {0.999, 0.9}) {
        auto v1 = zeno::build_fp1(sys, cfg, {{"1", r}}).program.solve(cfg.solver).verdict;
        auto v2 = zeno::build_fp2(sys, cfg, {{"1", r}}).program.solve(cfg.solver).verdict;
        ++total;
        if (v1 == v2) ++agree;
        require(v1 == v2, std::string("FP1/FP2 agreement on ") + c.file);
      }
    }
    note("FP1/FP2 verdicts agree on " + std::to_string(agree) + "/" + std::to_string(total) + " programs");
  }

  // Substitution residuals of every certificate produced in this run.
  {
    for (const auto& [label, set] :
         std::vector<std::pair<std::string, std::map<std::string, double>>>{{"classical c=0.3", {{"c", 0.3}}},
                                                                             {"classical c=0.8", {{"c", 0.8}}}}) {
      zeno::SynthesisConfig cfg;
      cfg.degree = 4;
      run_verify(label, load("classical_ball.json", set), cfg);
    }
    zeno::SynthesisConfig cfg;
    cfg.degree = 4;
    run_verify("example4 C=0.9", load("example4.json"), cfg);
    double worst = 0.0;
    for (const auto& [label, r] : g_residuals) {
      worst = std::max(worst, r);
      require(r <= 1e-6, "identity residual of " + label);
    }
    note("identity residuals: " + std::to_string(g_residuals.size()) + " certificates, worst " + fmt(worst, 3));
    require(!g_residuals.empty(), "at least one certificate");
  }

  std::string detail = failures.empty() ? "all property checks hold" : "failed:";
  for (const auto& f : failures) detail += " [" + f + "]";
  return {failures.empty(), detail};
}

Verdict criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  auto base = load("example1.json");
  std::vector<double> c2s;
  for (int k = 1; k <= 12; ++k) c2s.push_back(k / 10.0);
  const std::vector<double> c3s = {0.0, 0.005, 0.01};
  const double step = 0.1;
  // Largest c2 whose whole prefix of the column is certified, per c1 and c3.
  std::map<double, std::map<double, double>> boundary;
  std::map<double, std::map<double, double>> first_infeasible;
  for (double c1 : {0.1, 0.5, 0.9}) {
    zeno::SweepSpec spec;
    spec.grid = {{"c2", c2s}, {"c3", c3s}};
    auto sys = hybrid::reinstantiate(base, {{"c1", c1}});
    auto res = zeno::sweep(sys, zeno::SynthesisConfig{}, spec);
    std::map<double, std::string> columns;
    for (double c3 : c3s) {
      boundary[c1][c3] = 0.0;
      first_infeasible[c1][c3] = std::nan("");
      bool prefix = true;
      std::string col;
      for (double c2 : c2s) {
        auto it = std::find_if(res.points.begin(), res.points.end(), [&](const zeno::SweepPoint& p) {
          return p.values.at("c2") == c2 && p.values.at("c3") == c3;
        });
        const auto v = it->verdict;
        col += v == PointVerdict::feasible ? 'F' : v == PointVerdict::infeasible ? 'x' : '?';
        if (v == PointVerdict::feasible && prefix) boundary[c1][c3] = c2;
        if (v != PointVerdict::feasible) prefix = false;
        if (v == PointVerdict::infeasible && std::isnan(first_infeasible[c1][c3])) first_infeasible[c1][c3] = c2;
      }
      note("c1=" + fmt(c1) + " c3=" + fmt(c3) + "  c2=0.1..1.2: " + col + "  (F certified, x infeasible, ? inconclusive)");
    }
  }
  bool ok = true;
  std::string detail;
  for (double c3 : c3s) {
    double lo = 1e300;
    double hi = -1e300;
    for (const auto& [c1, m] : boundary) {
      lo = std::min(lo, m.at(c3));
      hi = std::max(hi, m.at(c3));
    }
    const bool col_ok = hi - lo < step - 1e-12;
    ok = ok && col_ok;
    detail += (detail.empty() ? "" : "; ") + std::string("c3=") + fmt(c3) + " boundary spread " + fmt(hi - lo, 3);
    std::string edges;
    for (const auto& [c1, m] : first_infeasible) edges += " " + fmt(m.at(c3));
    note("c3=" + fmt(c3) + ": certified boundary per c1 " + fmt(boundary[0.1][c3]) + " " + fmt(boundary[0.5][c3]) +
         " " + fmt(boundary[0.9][c3]) + "; first verified infeasible c2 per c1" + edges);
  }
  return {ok, detail + " (grid step 0.1); " + fmt(seconds_since(t0)) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--long") {
      g_long = true;
    } else {
      only.insert(std::stoi(a));
    }
  }
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    std::printf("criterion %d: running\n", id);
    std::fflush(stdout);
    Verdict v;
    try {
      v = criteria[k]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %d %s: %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
