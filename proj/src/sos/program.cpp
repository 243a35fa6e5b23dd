#include "zenosos/sos/program.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace zenosos::sos {

using poly::Monomial;
using poly::Polynomial;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::feasible: return "feasible";
    case Verdict::infeasible: return "infeasible";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::string to_string(SosCheck::Outcome o) {
  switch (o) {
    case SosCheck::Outcome::sos: return "sos";
    case SosCheck::Outcome::not_sos: return "not-sos";
    case SosCheck::Outcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

MonomialBasis MonomialBasis::up_to(std::size_t nvars, int degree) {
  MonomialBasis b;
  b.nvars = nvars;
  b.degree = std::max(0, degree);
  b.entries = poly::monomials_up_to(nvars, b.degree);
  return b;
}

SosProgram::SosProgram(poly::VariableList indeterminates) : vars_(std::move(indeterminates)) {
  atoms_.push_back({AtomInfo::constant, 0, 0, 0});
}

void SosProgram::check_name(const std::string& name) {
  if (!names_.emplace(name, 0).second) {
    throw std::invalid_argument("duplicate SOS program variable '" + name + "'");
  }
}

PolyVariable SosProgram::new_poly_var(const std::string& name, int degree) {
  if (degree < 0) throw std::invalid_argument("polynomial variable degree must be >= 0");
  return new_poly_var(name, MonomialBasis::up_to(nvars(), degree));
}

PolyVariable SosProgram::new_poly_var(const std::string& name, MonomialBasis basis) {
  check_name(name);
  PolyVariable v;
  v.name = name;
  v.basis = std::move(basis);
  v.first_slot = free_count_;
  v.first_atom = static_cast<AtomId>(atoms_.size());
  for (std::size_t k = 0; k < v.basis.size(); ++k) {
    atoms_.push_back({AtomInfo::free, free_count_++, 0, 0});
  }
  atom_count_ = atoms_.size();
  poly_vars_.push_back(v);
  return v;
}

SosVariable SosProgram::new_sos_var(const std::string& name, int degree) {
  if (degree < 0) throw std::invalid_argument("SOS variable degree must be >= 0");
  if (degree % 2 != 0) {
    log_.push_back("SOS variable '" + name + "' requested with odd degree " +
                   std::to_string(degree) + ", rounded up to " + std::to_string(degree + 1));
    ++degree;
  }
  return new_sos_var(name, MonomialBasis::up_to(nvars(), degree / 2));
}

SosVariable SosProgram::new_sos_var(const std::string& name, MonomialBasis half_basis) {
  check_name(name);
  SosVariable v;
  v.name = name;
  v.basis = std::move(half_basis);
  v.block = static_cast<int>(block_sizes_.size());
  const int n = static_cast<int>(v.basis.size());
  block_sizes_.push_back(n);
  v.first_atom = static_cast<AtomId>(atoms_.size());
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) atoms_.push_back({AtomInfo::gram, v.block, r, c});
  }
  atom_count_ = atoms_.size();
  sos_vars_.push_back(v);
  return v;
}

ScalarVariable SosProgram::new_scalar(const std::string& name, double floor) {
  check_name(name);
  ScalarVariable v;
  v.name = name;
  v.floor = floor;
  v.block = static_cast<int>(block_sizes_.size());
  block_sizes_.push_back(1);
  v.atom = static_cast<AtomId>(atoms_.size());
  atoms_.push_back({AtomInfo::gram, v.block, 0, 0});
  atom_count_ = atoms_.size();
  scalars_.push_back(v);
  return v;
}

AtomId SosProgram::gram_atom(const SosVariable& v, std::size_t row, std::size_t col) {
  if (row > col) std::swap(row, col);
  const std::size_t n = v.basis.size();
  const std::size_t idx = row * n - row * (row - 1) / 2 + (col - row);
  return v.first_atom + static_cast<AtomId>(idx);
}

LinPoly SosProgram::lin(const PolyVariable& v) const {
  LinPoly out(nvars());
  for (std::size_t k = 0; k < v.basis.size(); ++k) {
    out.add_term(v.basis.entries[k], v.first_atom + static_cast<AtomId>(k), 1.0);
  }
  return out;
}

LinPoly SosProgram::lin(const SosVariable& v) const {
  LinPoly out(nvars());
  const std::size_t n = v.basis.size();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) {
      out.add_term(v.basis.entries[r] * v.basis.entries[c], gram_atom(v, r, c), r == c ? 1.0 : 2.0);
    }
  }
  return out;
}

LinPoly SosProgram::lin(const ScalarVariable& v) const {
  LinPoly out(nvars());
  out.add_term(Monomial{}, kConstantAtom, v.floor);
  out.add_term(Monomial{}, v.atom, 1.0);
  return out;
}

LinPoly SosProgram::data(const Polynomial& p) const {
  return LinPoly::data(p.over(poly::union_variables(vars_, p.variables())), nvars());
}

LinPoly SosProgram::constant(double c) const {
  return LinPoly::data(Polynomial::constant(c, vars_), nvars());
}

void SosProgram::add_identity(const LinPoly& expr, const std::string& label) {
  if (expr.nvars() > nvars()) throw std::invalid_argument("identity uses unknown indeterminates");
  for (const auto& [m, row] : expr.terms()) {
    for (const auto& [a, c] : row) {
      if (a < 0 || static_cast<std::size_t>(a) >= atoms_.size()) {
        throw std::invalid_argument("identity '" + label + "' refers to a foreign variable");
      }
    }
  }
  identities_.push_back({label, expr});
}

SosVariable SosProgram::add_sos_constraint(const LinPoly& expr, const std::string& label, int degree) {
  int d = expr.degree();
  if (d % 2) ++d;
  d = std::max(d, degree);
  if (d % 2) ++d;
  SosVariable s = new_sos_var(label + ".sigma", d);
  add_identity(expr - lin(s), label);
  return s;
}

CompiledProgram SosProgram::compile() const {
  CompiledProgram out;
  auto& prob = out.problem;
  prob.block_sizes = block_sizes_;
  prob.free_count = free_count_;
  for (std::size_t id = 0; id < identities_.size(); ++id) {
    for (const auto& [m, row] : identities_[id].expr.terms()) {
      sdp::LinearConstraint c;
      for (const auto& [a, coef] : row) {
        if (coef == 0.0) continue;
        const AtomInfo& info = atoms_[a];
        switch (info.kind) {
          case AtomInfo::constant:
            c.rhs -= coef;
            break;
          case AtomInfo::free:
            c.free.push_back({info.index, coef});
            break;
          case AtomInfo::gram:
            c.entries.push_back({info.index, info.row, info.col, info.row == info.col ? coef : 0.5 * coef});
            break;
        }
      }
      if (c.entries.empty() && c.free.empty() && c.rhs == 0.0) continue;
      prob.constraints.push_back(std::move(c));
      out.row_origin.emplace_back(static_cast<int>(id), m);
    }
  }
  return out;
}

Polynomial gram_polynomial(const MonomialBasis& basis, const Eigen::MatrixXd& Q,
                           const poly::VariableList& variables) {
  Polynomial::TermMap t;
  const std::size_t n = basis.size();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      t[basis.entries[r] * basis.entries[c]] += Q(r, c);
    }
  }
  return Polynomial(variables, std::move(t));
}

GramSummary summarize_gram(const Eigen::MatrixXd& Q, double threshold) {
  GramSummary s;
  if (Q.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
  s.eigenvalues = es.eigenvalues();
  s.min_eigenvalue = s.eigenvalues(0);
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    if (s.eigenvalues(i) < threshold) ++s.small_eigenvalues;
  }
  return s;
}

SosSolution SosProgram::solve(const sdp::SolverOptions& opts) const {
  SosSolution out;
  auto t0 = std::chrono::steady_clock::now();
  CompiledProgram cp = compile();
  out.rows = static_cast<int>(cp.problem.constraints.size());
  if (cp.problem.constraints.empty()) {
    // Every identity holds with all unknowns at zero.
    out.verdict = Verdict::feasible;
    out.sdp.status = sdp::Status::optimal;
    for (int b : block_sizes_) {
      out.sdp.X.push_back(Eigen::MatrixXd::Zero(b, b));
      out.sdp.S.push_back(Eigen::MatrixXd::Zero(b, b));
    }
    out.sdp.xf = Eigen::VectorXd::Zero(free_count_);
  } else {
    out.sdp = sdp::solve(cp.problem, opts);
    switch (out.sdp.status) {
      case sdp::Status::optimal: out.verdict = Verdict::feasible; break;
      case sdp::Status::infeasible_certificate: out.verdict = Verdict::infeasible; break;
      default: out.verdict = Verdict::inconclusive; break;
    }
  }
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out.verdict != Verdict::feasible) return out;

  out.atom_values.assign(atoms_.size(), 0.0);
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    const auto& info = atoms_[a];
    switch (info.kind) {
      case AtomInfo::constant: out.atom_values[a] = 1.0; break;
      case AtomInfo::free: out.atom_values[a] = out.sdp.xf(info.index); break;
      case AtomInfo::gram: out.atom_values[a] = out.sdp.X[info.index](info.row, info.col); break;
    }
  }
  for (const auto& v : poly_vars_) out.polynomials.emplace(v.name, lin(v).evaluate(out.atom_values, vars_));
  for (const auto& v : sos_vars_) {
    const auto& Q = out.sdp.X[v.block];
    out.grams.emplace(v.name, Q);
    out.gram_summaries.emplace(v.name, summarize_gram(Q));
    out.polynomials.emplace(v.name, gram_polynomial(v.basis, Q, vars_));
  }
  for (const auto& v : scalars_) out.scalars.emplace(v.name, v.floor + out.sdp.X[v.block](0, 0));
  for (const auto& id : identities_) {
    const double r = id.expr.evaluate(out.atom_values, vars_).max_abs_coefficient();
    out.identity_residuals.push_back(r);
    out.max_identity_residual = std::max(out.max_identity_residual, r);
  }
  return out;
}

SosCheck check_sos(const Polynomial& p, const sdp::SolverOptions& opts) {
  SosCheck out;
  if (p.degree() % 2 != 0) {
    out.outcome = SosCheck::Outcome::not_sos;
    out.note = "odd degree";
    return out;
  }
  SosProgram prog(p.variables());
  SosVariable s = prog.new_sos_var("sigma", p.degree());
  prog.add_identity(prog.data(p) - prog.lin(s), "gram");
  out.basis = s.basis;
  CompiledProgram cp = prog.compile();
  SosSolution sol = prog.solve(opts);
  out.sdp = sol.sdp;
  switch (sol.verdict) {
    case Verdict::feasible: {
      out.outcome = SosCheck::Outcome::sos;
      out.gram = sol.grams.at("sigma");
      out.reconstruction_error = max_coefficient_difference(p, gram_polynomial(s.basis, out.gram, p.variables()));
      break;
    }
    case Verdict::infeasible: {
      out.outcome = SosCheck::Outcome::not_sos;
      out.ray = sol.sdp.ray;
      out.ray_verified = sdp::verify_ray(cp.problem, out.ray, opts.ray_tol).valid;
      break;
    }
    case Verdict::inconclusive:
      out.outcome = SosCheck::Outcome::inconclusive;
      out.note = sdp::to_string(sol.sdp.status) + ": " + sol.sdp.message;
      break;
  }
  return out;
}

nlohmann::json polynomial_json(const Polynomial& p) {
  nlohmann::json j;
  j["variables"] = p.variables();
  auto mons = nlohmann::json::array();
  auto coefs = nlohmann::json::array();
  for (const auto& [m, c] : p.terms()) {
    mons.push_back(m.dense(p.variables().size()));
    coefs.push_back(c);
  }
  j["monomials"] = mons;
  j["coefficients"] = coefs;
  return j;
}

nlohmann::json to_json(const SosProgram& prog, const SosSolution& sol) {
  nlohmann::json j;
  j["indeterminates"] = prog.indeterminates();
  nlohmann::json vars = nlohmann::json::object();
  for (const auto& v : prog.poly_vars()) {
    auto it = sol.polynomials.find(v.name);
    if (it == sol.polynomials.end()) continue;
    auto e = polynomial_json(it->second);
    e["kind"] = "polynomial";
    vars[v.name] = e;
  }
  for (const auto& v : prog.sos_vars()) {
    auto it = sol.polynomials.find(v.name);
    if (it == sol.polynomials.end()) continue;
    auto e = polynomial_json(it->second);
    e["kind"] = "sos";
    const auto& gs = sol.gram_summaries.at(v.name);
    e["gram"] = {{"size", v.basis.size()},
                 {"min_eigenvalue", gs.min_eigenvalue},
                 {"max_eigenvalue", gs.eigenvalues.size() ? gs.eigenvalues(gs.eigenvalues.size() - 1) : 0.0},
                 {"eigenvalues_below_1e-8", gs.small_eigenvalues}};
    vars[v.name] = e;
  }
  j["variables"] = vars;
  nlohmann::json scalars = nlohmann::json::object();
  for (const auto& [k, v] : sol.scalars) scalars[k] = v;
  j["scalars"] = scalars;
  return j;
}

}  // namespace zenosos::sos
