#include <algorithm>
#include <sstream>

#include "zenosos/zeno/synthesis.hpp"

namespace zenosos::zeno {

using poly::Polynomial;
using sos::LinPoly;

namespace {

int even_up(int d) { return d % 2 == 0 ? d : d + 1; }
int even_down(int d) { return d % 2 == 0 ? d : d - 1; }

struct Multiplied {
  Polynomial poly;
  std::string name;
};

class Builder {
 public:
  Builder(const HybridSystem& sys, const SynthesisConfig& cfg, const std::map<std::string, double>& r,
          bool parametric)
      : sys_(sys), cfg_(cfg), vars_(sys.all_variables()), n_(sys.dimension()) {
    fp_.program = sos::SosProgram(vars_);
    fp_.parametric = parametric;
    fp_.r = r;
  }

  FeasibilityProgram run() {
    check();
    auto& P = fp_.program;
    fp_.alpha = P.new_scalar("alpha", cfg_.alpha_floor);
    double gamma_floor = cfg_.gamma_floor;
    if (sys_.zeno_point_is_equilibrium()) {
      gamma_floor = 0.0;
      fp_.notes.push_back("some field vanishes at its zeno point; gamma floor relaxed to 0");
    }
    fp_.gamma = P.new_scalar("gamma", gamma_floor);
    for (const auto& m : sys_.modes) {
      const int d = cfg_.degree_of(m.id);
      fp_.lyapunov.emplace(m.id, P.new_poly_var("V_" + m.id, d));
    }
    for (const auto& m : sys_.modes) {
      add_zero(m);
      for (std::size_t k = 0; k < m.domain_pieces.size(); ++k) add_positivity(m, static_cast<int>(k));
      for (std::size_t k = 0; k < m.domain_pieces.size(); ++k) add_decrease(m, static_cast<int>(k));
    }
    for (std::size_t e = 0; e < sys_.edges.size(); ++e) {
      const auto& src = sys_.mode(sys_.edges[e].source);
      for (std::size_t k = 0; k < src.domain_pieces.size(); ++k) add_reset(static_cast<int>(e), static_cast<int>(k));
    }
    return std::move(fp_);
  }

 private:
  void check() const {
    if (cfg_.decision_r) {
      throw sos::BilinearError("r_q multiplies the unknown V_q; r_q must be fixed for each solve");
    }
    if (!sys_.has_zeno_equilibrium()) throw hybrid::SystemError("the system declares no zeno equilibrium");
    auto rep = hybrid::validate(sys_);
    if (!rep.ok()) throw hybrid::SystemError("system is invalid: " + rep.violations.front());
    if (!rep.cyclic) throw hybrid::SystemError("certificate synthesis needs a cyclic system");
    bool below_one = false;
    for (const auto& m : sys_.modes) {
      auto it = fp_.r.find(m.id);
      if (it == fp_.r.end()) throw std::invalid_argument("no r value for mode " + m.id);
      if (!(it->second > 0.0 && it->second <= 1.0)) throw std::invalid_argument("r values must lie in (0, 1]");
      if (it->second < 1.0) below_one = true;
      const int d = cfg_.degree_of(m.id);
      if (d < 2 || d % 2 != 0) throw std::invalid_argument("Lyapunov degree must be even and >= 2");
    }
    if (!below_one) throw std::invalid_argument("at least one r value must be below 1");
  }

  std::string piece_suffix(const hybrid::Mode& m, int piece) const {
    return m.domain_pieces.size() > 1 ? "#" + std::to_string(piece + 1) : std::string{};
  }

  std::vector<Polynomial> pi() const {
    return fp_.parametric ? sys_.parameter_set.inequalities : std::vector<Polynomial>{};
  }

  /// x_i -> image[i] for the state, parameters unchanged.
  std::vector<Polynomial> substitution(const std::vector<Polynomial>& image) const {
    std::vector<Polynomial> out;
    for (std::size_t i = 0; i < n_; ++i) out.push_back(image[i].over(vars_));
    for (std::size_t j = n_; j < vars_.size(); ++j) out.push_back(Polynomial::variable(vars_[j], vars_));
    return out;
  }

  std::vector<Polynomial> at_point(const std::vector<double>& z) const {
    std::vector<Polynomial> image;
    for (double v : z) image.push_back(Polynomial::constant(v, vars_));
    return substitution(image);
  }

  Polynomial distance2(const std::vector<double>& z) const {
    Polynomial out = Polynomial::constant(0.0, vars_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto d = Polynomial::variable(vars_[i], vars_) - Polynomial::constant(z[i], vars_);
      out = out + d * d;
    }
    return out;
  }

  /// expr - sum s_k g_k - m0 h0 in Sigma, with multiplier degrees derived
  /// from the common target degree.
  void constrain(LinPoly expr, const std::vector<Multiplied>& cone, const Polynomial* ideal, ConstraintRecord rec) {
    auto& P = fp_.program;
    int data_degree = expr.degree();
    for (const auto& g : cone) data_degree = std::max(data_degree, g.poly.degree());
    if (ideal) data_degree = std::max(data_degree, ideal->degree());
    const int T = even_up(data_degree) + cfg_.multiplier_degree_slack;
    rec.target_degree = T;
    for (const auto& g : cone) {
      const int d = std::max(0, even_down(T - g.poly.degree()));
      auto s = P.new_sos_var(rec.label + "." + g.name, d);
      expr -= P.data(g.poly) * P.lin(s);
      rec.multipliers.push_back(s.name);
    }
    if (ideal) {
      auto m = P.new_poly_var(rec.label + ".m0", std::max(0, T - ideal->degree()));
      expr -= P.data(*ideal) * P.lin(m);
      rec.multipliers.push_back(m.name);
    }
    P.add_sos_constraint(expr, rec.label, T);
    fp_.constraints.push_back(std::move(rec));
  }

  void add_domain_terms(const hybrid::Mode& m, int piece, const char* w_name, const char* g_name, const char* pi_name,
                        std::vector<Multiplied>& cone) const {
    for (std::size_t k = 0; k < m.neighborhood.inequalities.size(); ++k) {
      cone.push_back({m.neighborhood.inequalities[k], w_name + std::to_string(k + 1)});
    }
    const auto& dom = m.domain_pieces[piece];
    for (std::size_t k = 0; k < dom.inequalities.size(); ++k) {
      cone.push_back({dom.inequalities[k], g_name + std::to_string(k + 1)});
    }
    const auto p = pi();
    for (std::size_t k = 0; k < p.size(); ++k) cone.push_back({p[k], pi_name + std::to_string(k + 1)});
  }

  void add_zero(const hybrid::Mode& m) {
    auto& P = fp_.program;
    const auto& z = sys_.zeno_equilibrium.at(m.id);
    P.add_identity(sos::compose(P.lin(fp_.lyapunov.at(m.id)), at_point(z)), "zero[" + m.id + "]");
  }

  void add_positivity(const hybrid::Mode& m, int piece) {
    auto& P = fp_.program;
    const auto& z = sys_.zeno_equilibrium.at(m.id);
    LinPoly expr = P.lin(fp_.lyapunov.at(m.id)) - sos::multiply(distance2(z), P.lin(fp_.alpha));
    std::vector<Multiplied> cone;
    add_domain_terms(m, piece, "a", "b", "eta", cone);
    constrain(std::move(expr), cone, nullptr, {"pos[" + m.id + "]" + piece_suffix(m, piece), "positivity", m.id, -1, piece, 0, {}});
  }

  void add_decrease(const hybrid::Mode& m, int piece) {
    auto& P = fp_.program;
    const LinPoly V = P.lin(fp_.lyapunov.at(m.id));
    LinPoly expr = -P.lin(fp_.gamma);
    for (std::size_t i = 0; i < n_; ++i) {
      expr -= sos::multiply(m.field[i].over(vars_), sos::derivative(V, static_cast<std::uint32_t>(i)));
    }
    std::vector<Multiplied> cone;
    add_domain_terms(m, piece, "c", "d", "beta", cone);
    constrain(std::move(expr), cone, nullptr, {"dec[" + m.id + "]" + piece_suffix(m, piece), "decrease", m.id, -1, piece, 0, {}});
  }

  void add_reset(int e, int piece) {
    auto& P = fp_.program;
    const auto& edge = sys_.edges[e];
    const auto& m = sys_.mode(edge.source);
    LinPoly expr = fp_.r.at(edge.source) * P.lin(fp_.lyapunov.at(edge.source)) -
                   sos::compose(P.lin(fp_.lyapunov.at(edge.target)), substitution(edge.reset.components));
    std::vector<Multiplied> cone;
    for (std::size_t l = 0; l < edge.guard_inequalities.size(); ++l) {
      cone.push_back({edge.guard_inequalities[l], "m" + std::to_string(l + 1)});
    }
    add_domain_terms(m, piece, "i", "j", "zeta", cone);
    const Polynomial h0 = edge.guard_equality.over(vars_);
    constrain(std::move(expr), cone, &h0,
              {"reset[" + edge.source + "->" + edge.target + "]" + piece_suffix(m, piece), "reset", m.id, e, piece, 0, {}});
  }

  const HybridSystem& sys_;
  const SynthesisConfig& cfg_;
  poly::VariableList vars_;
  std::size_t n_;
  FeasibilityProgram fp_;
};

}  // namespace

int SynthesisConfig::degree_of(const std::string& mode) const {
  auto it = mode_degree.find(mode);
  return it == mode_degree.end() ? degree : it->second;
}

nlohmann::json SynthesisConfig::to_json() const {
  nlohmann::json j;
  j["degree"] = degree;
  if (!mode_degree.empty()) j["mode_degree"] = mode_degree;
  j["multiplier_degree_slack"] = multiplier_degree_slack;
  j["r_grid"] = r_grid;
  if (!fixed_r.empty()) j["fixed_r"] = fixed_r;
  j["alpha_floor"] = alpha_floor;
  j["gamma_floor"] = gamma_floor;
  j["max_degree"] = max_degree;
  j["post_samples"] = post_samples;
  j["cert_margin"] = cert_margin;
  j["sample_radius"] = sample_radius;
  j["parameter_radius"] = parameter_radius;
  j["seed"] = seed;
  j["solver"] = {{"feas_tol", solver.feas_tol},
                 {"gap_tol", solver.gap_tol},
                 {"max_iterations", solver.max_iterations}};
  return j;
}

FeasibilityProgram build_fp1(const HybridSystem& sys, const SynthesisConfig& config,
                             const std::map<std::string, double>& r) {
  if (sys.parameterized()) {
    throw hybrid::SystemError("the nominal program needs numeric values for every parameter");
  }
  return Builder(sys, config, r, false).run();
}

FeasibilityProgram build_fp2(const HybridSystem& sys, const SynthesisConfig& config,
                             const std::map<std::string, double>& r) {
  return Builder(sys, config, r, sys.parameterized()).run();
}

}  // namespace zenosos::zeno
