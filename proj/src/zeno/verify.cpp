#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "zenosos/poly/parser.hpp"
#include "zenosos/zeno/synthesis.hpp"

namespace zenosos::zeno {

using poly::Polynomial;

namespace {

constexpr double kZeroTol = 1e-8;
constexpr double kResidualTol = 1e-6;

/// Sampling helper over the (x, p) space of a system.
class Sampler {
 public:
  Sampler(const HybridSystem& sys, const SynthesisConfig& cfg)
      : sys_(sys), cfg_(cfg), rng_(cfg.seed), n_(sys.dimension()), np_(sys.parameters.size()) {}

  std::mt19937_64& rng() { return rng_; }

  /// Point near z (half of the draws concentrate at geometrically smaller
  /// scales, where certificates are tightest) with parameters drawn from the
  /// parameter box; rejected against P only.
  std::optional<std::vector<double>> draw(const std::vector<double>& z) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::vector<double> pt(n_ + np_);
      const double scale = u01(rng_) < 0.5 ? 1.0 : std::pow(10.0, -4.0 * u01(rng_));
      for (std::size_t i = 0; i < n_; ++i) pt[i] = z[i] + cfg_.sample_radius * scale * u(rng_);
      for (std::size_t j = 0; j < np_; ++j) pt[n_ + j] = cfg_.parameter_radius * u(rng_);
      if (np_ == 0 || sys_.parameter_set.contains(pt, 0.0)) return pt;
    }
    return std::nullopt;
  }

  std::vector<double> direction() {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> d(n_);
    double norm = 0.0;
    for (auto& v : d) {
      v = g(rng_);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : d) v /= norm;
    return d;
  }

 private:
  const HybridSystem& sys_;
  const SynthesisConfig& cfg_;
  std::mt19937_64 rng_;
  std::size_t n_, np_;
};

bool in_region(const hybrid::Mode& m, std::span<const double> pt, double tol) {
  return m.in_domain(pt, tol) && m.neighborhood.contains(pt, tol);
}

double dist2(std::span<const double> pt, const std::vector<double>& z) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (pt[i] - z[i]) * (pt[i] - z[i]);
  return s;
}

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::certified: return "certified";
    case Outcome::no_certificate: return "no-certificate";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

nlohmann::json SamplingReport::to_json() const {
  return {{"samples", samples},
          {"guard_samples", guard_samples},
          {"violations", violations},
          {"worst_positivity", worst_positivity},
          {"worst_decrease", worst_decrease},
          {"worst_reset", worst_reset},
          {"worst_zero", worst_zero},
          {"notes", notes},
          {"passed", passed}};
}

nlohmann::json ZenoCertificate::to_json() const {
  nlohmann::json j;
  j["system"] = system;
  j["degree"] = degree;
  j["parametric"] = parametric;
  j["variables"] = variables;
  nlohmann::json V;
  for (const auto& [q, p] : lyapunov) {
    V[q] = sos::polynomial_json(p);
    V[q]["text"] = poly::to_string(p);
  }
  j["lyapunov"] = V;
  j["constants"] = {{"alpha", alpha}, {"gamma", gamma}, {"r", r}};
  j["sampling"] = sampling.to_json();
  j["max_identity_residual"] = max_identity_residual;
  j["sdp"] = {{"iterations", sdp_iterations},
              {"primal_residual", sdp_residuals.primal_relative},
              {"dual_residual", sdp_residuals.dual_relative},
              {"gap", sdp_residuals.gap_relative}};
  j["program"] = program_json;
  return j;
}

nlohmann::json VerifyResult::to_json() const {
  nlohmann::json j;
  j["outcome"] = zeno::to_string(outcome);
  j["seconds"] = seconds;
  j["sdp_iterations"] = sdp_iterations;
  j["diagnostics"] = diagnostics;
  auto& a = j["attempts"] = nlohmann::json::array();
  for (const auto& at : attempts) {
    a.push_back({{"degree", at.degree},
                 {"r", at.r},
                 {"verdict", sos::to_string(at.verdict)},
                 {"sdp_status", at.sdp_status},
                 {"iterations", at.iterations},
                 {"rows", at.rows},
                 {"seconds", at.seconds},
                 {"note", at.note}});
  }
  if (certificate) j["certificate"] = certificate->to_json();
  return j;
}

SamplingReport post_verify(const HybridSystem& sys, const ZenoCertificate& cert, int samples,
                           const SynthesisConfig& cfg) {
  SamplingReport rep;
  const double margin = cfg.cert_margin;
  const double tol = hybrid::kMembershipTol;
  const std::size_t n = sys.dimension();
  Sampler sampler(sys, cfg);
  rep.worst_positivity = std::numeric_limits<double>::infinity();
  rep.worst_decrease = -std::numeric_limits<double>::infinity();
  rep.worst_reset = std::numeric_limits<double>::infinity();

  std::map<std::string, poly::PolyVector> grads;
  for (const auto& [q, V] : cert.lyapunov) {
    std::span<const std::string> state(sys.state);
    grads.emplace(q, poly::gradient(V, state));
  }

  for (const auto& m : sys.modes) {
    const auto& z = sys.zeno_equilibrium.at(m.id);
    const auto& V = cert.lyapunov.at(m.id);
    const auto& dV = grads.at(m.id);
    for (int k = 0; k < 32; ++k) {
      auto pt = sampler.draw(z);
      if (!pt) break;
      std::copy(z.begin(), z.end(), pt->begin());
      const double v0 = std::abs(poly::evaluate(V, *pt));
      rep.worst_zero = std::max(rep.worst_zero, v0);
      if (v0 > kZeroTol) ++rep.violations;
    }
    int got = 0;
    for (int attempt = 0; attempt < 50 * samples && got < samples; ++attempt) {
      auto pt = sampler.draw(z);
      if (!pt) break;
      if (!in_region(m, *pt, 0.0)) continue;
      ++got;
      const double pos = poly::evaluate(V, *pt) - cert.alpha * dist2(*pt, z);
      double dec = cert.gamma;
      for (std::size_t i = 0; i < n; ++i) dec += poly::evaluate(dV[i], *pt) * poly::evaluate(m.field[i], *pt);
      rep.worst_positivity = std::min(rep.worst_positivity, pos);
      rep.worst_decrease = std::max(rep.worst_decrease, dec);
      if (pos < -margin) ++rep.violations;
      if (dec > margin) ++rep.violations;
    }
    rep.samples += got;
    if (got < samples) {
      rep.notes.push_back("mode " + m.id + ": only " + std::to_string(got) + " of " + std::to_string(samples) +
                          " samples landed in the neighborhood");
    }
  }

  for (const auto& e : sys.edges) {
    const auto& m = sys.mode(e.source);
    const auto& z = sys.zeno_equilibrium.at(e.source);
    const auto& Vq = cert.lyapunov.at(e.source);
    const auto& Vt = cert.lyapunov.at(e.target);
    const double rq = cert.r.at(e.source);
    int got = 0;
    for (int attempt = 0; attempt < 20 * samples && got < samples; ++attempt) {
      auto base = sampler.draw(z);
      if (!base) break;
      const auto dir = sampler.direction();
      double span = cfg.sample_radius;
      for (std::size_t i = 0; i < n; ++i) span = std::max(span, std::abs((*base)[i] - z[i]));
      auto at = [&](double t) {
        std::vector<double> pt = *base;
        for (std::size_t i = 0; i < n; ++i) pt[i] += t * dir[i];
        return pt;
      };
      auto h = [&](double t) { return poly::evaluate(e.guard_equality, at(t)); };
      constexpr int kGrid = 64;
      double t_prev = -2 * span;
      double h_prev = h(t_prev);
      for (int g = 1; g <= kGrid && got < samples; ++g) {
        const double t = -2 * span + 4 * span * g / kGrid;
        const double hv = h(t);
        if ((h_prev < 0) != (hv < 0) || hv == 0.0) {
          double lo = t_prev, hi = t;
          double flo = h_prev;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = h(mid);
            if ((fm < 0) == (flo < 0) && fm != 0.0) {
              lo = mid;
              flo = fm;
            } else {
              hi = mid;
            }
          }
          auto pt = at(std::abs(h(lo)) < std::abs(h(hi)) ? lo : hi);
          if (e.guard_holds(pt, 0.0) && in_region(m, pt, tol)) {
            std::vector<double> img(pt.size());
            for (std::size_t i = 0; i < n; ++i) img[i] = poly::evaluate(e.reset[i], pt);
            for (std::size_t j = n; j < pt.size(); ++j) img[j] = pt[j];
            const double val = rq * poly::evaluate(Vq, pt) - poly::evaluate(Vt, img);
            rep.worst_reset = std::min(rep.worst_reset, val);
            if (val < -margin) ++rep.violations;
            ++got;
          }
        }
        t_prev = t;
        h_prev = hv;
      }
    }
    rep.guard_samples += got;
    if (got < samples) {
      rep.notes.push_back("edge " + e.source + "->" + e.target + ": only " + std::to_string(got) + " of " +
                          std::to_string(samples) + " guard samples");
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

// r V_q enters a reset constraint; adding (r' - r) times the positivity
// certificate of the same piece lifts a solution at r to one at r' > r
// whenever the reset constraint has at least the positivity degree.
bool monotone_in_r(const FeasibilityProgram& fp) {
  for (const auto& rc : fp.constraints) {
    if (rc.kind != "reset") continue;
    for (const auto& pc : fp.constraints) {
      if (pc.kind == "positivity" && pc.mode == rc.mode && pc.piece == rc.piece &&
          pc.target_degree > rc.target_degree) {
        return false;
      }
    }
  }
  return true;
}

VerifyResult verify(const HybridSystem& sys, const SynthesisConfig& config) {
  VerifyResult res;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  if (config.decision_r) throw sos::BilinearError("r_q multiplies the unknown V_q; r_q must be fixed for each solve");

  // Candidate r assignments: one mode below one, the others at one; grouped
  // per mode in decreasing r.
  std::vector<std::vector<std::map<std::string, double>>> groups;
  if (!config.fixed_r.empty()) {
    groups.push_back({config.fixed_r});
  } else {
    std::vector<double> grid = config.r_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());
    for (const auto& m : sys.modes) {
      std::vector<std::map<std::string, double>> g;
      for (double r : grid) {
        std::map<std::string, double> assign;
        for (const auto& o : sys.modes) assign[o.id] = o.id == m.id ? r : 1.0;
        g.push_back(std::move(assign));
      }
      groups.push_back(std::move(g));
    }
  }

  const int top = std::max(config.degree, config.max_degree);
  bool every_degree_infeasible = true;
  for (int degree = config.degree; degree <= top; degree += 2) {
    SynthesisConfig cfg = config;
    cfg.degree = degree;
    if (degree != config.degree) {
      for (auto& [q, d] : cfg.mode_degree) d += degree - config.degree;
    }
    bool all_infeasible = true;
    for (const auto& group : groups) {
      for (std::size_t gi = 0; gi < group.size(); ++gi) {
        const auto& r = group[gi];
        Attempt at;
        at.degree = degree;
        at.r = r;
        FeasibilityProgram fp = sys.parameterized() ? build_fp2(sys, cfg, r) : build_fp1(sys, cfg, r);
        auto sol = fp.program.solve(cfg.solver);
        at.verdict = sol.verdict;
        at.sdp_status = sdp::to_string(sol.sdp.status);
        at.iterations = sol.sdp.iterations;
        at.rows = sol.rows;
        at.seconds = sol.solve_seconds;
        res.sdp_iterations += sol.sdp.iterations;
        const bool prune = monotone_in_r(fp);
        if (sol.verdict == sos::Verdict::infeasible) {
          at.note = "verified infeasibility";
          if (prune) at.note += "; smaller r values in this group pruned";
          res.attempts.push_back(at);
          if (prune) break;
          continue;
        }
        if (sol.verdict == sos::Verdict::inconclusive) {
          all_infeasible = false;
          at.note = sol.sdp.message;
          if (prune && gi + 1 < group.size()) at.note += "; smaller r values in this group skipped";
          res.attempts.push_back(at);
          if (prune) break;
          continue;
        }
        all_infeasible = false;
        ZenoCertificate cert;
        cert.system = sys.name;
        cert.degree = degree;
        cert.parametric = fp.parametric;
        cert.variables = sys.all_variables();
        for (const auto& [q, v] : fp.lyapunov) cert.lyapunov.emplace(q, sol.polynomials.at(v.name));
        cert.polynomials = sol.polynomials;
        cert.alpha = sol.scalars.at("alpha");
        cert.gamma = sol.scalars.at("gamma");
        cert.r = r;
        cert.max_identity_residual = sol.max_identity_residual;
        cert.sdp_residuals = sol.sdp.residuals;
        cert.sdp_iterations = sol.sdp.iterations;
        cert.program_json = sos::to_json(fp.program, sol);
        cert.sampling = post_verify(sys, cert, cfg.post_samples, cfg);
        const bool residual_ok = cert.max_identity_residual <= kResidualTol;
        if (cert.sampling.passed && residual_ok) {
          at.note = "certificate passed post-verification";
          res.attempts.push_back(at);
          res.outcome = Outcome::certified;
          res.certificate = std::move(cert);
          for (const auto& note : fp.notes) res.diagnostics.push_back(note);
          res.seconds = elapsed();
          return res;
        }
        at.note = !residual_ok ? "identity residual " + poly::format_double(cert.max_identity_residual) +
                                     " above tolerance"
                               : "post-verification found " + std::to_string(cert.sampling.violations) +
                                     " violations";
        res.diagnostics.push_back("degree " + std::to_string(degree) + ": solver reported feasible but " + at.note);
        res.attempts.push_back(at);
      }
    }
    if (!all_infeasible) every_degree_infeasible = false;
  }
  res.outcome = every_degree_infeasible ? Outcome::no_certificate : Outcome::inconclusive;
  res.seconds = elapsed();
  return res;
}

}  // namespace zenosos::zeno
