#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "zenosos/poly/polynomial.hpp"
#include "zenosos/sdp/solver.hpp"
#include "zenosos/sos/linpoly.hpp"

namespace zenosos::sos {

/// Graded-lex monomials of total degree <= degree over the first `nvars`
/// indeterminates of a program.
struct MonomialBasis {
  std::size_t nvars = 0;
  int degree = 0;
  std::vector<poly::Monomial> entries;

  static MonomialBasis up_to(std::size_t nvars, int degree);
  std::size_t size() const { return entries.size(); }
};

/// Free polynomial: one free SDP scalar per basis entry.
struct PolyVariable {
  std::string name;
  MonomialBasis basis;
  int first_slot = 0;
  AtomId first_atom = 0;
};

/// SOS polynomial Z' Q Z with Q a PSD block over a half-degree basis.
struct SosVariable {
  std::string name;
  MonomialBasis basis;
  int block = 0;
  AtomId first_atom = 0;
  int degree() const { return 2 * basis.degree; }
};

/// Scalar constrained to value >= floor, stored as floor + a 1x1 PSD block.
struct ScalarVariable {
  std::string name;
  double floor = 0.0;
  int block = 0;
  AtomId atom = 0;
};

enum class Verdict { feasible, infeasible, inconclusive };
std::string to_string(Verdict v);

struct GramSummary {
  Eigen::VectorXd eigenvalues;
  double min_eigenvalue = 0.0;
  /// Eigenvalues below the rank threshold (1e-8).
  int small_eigenvalues = 0;
};

struct IdentityInfo {
  std::string label;
  LinPoly expr;
};

struct CompiledProgram {
  sdp::SdpProblem problem;
  /// For each SDP row: identity index and monomial it matches.
  std::vector<std::pair<int, poly::Monomial>> row_origin;
};

struct SosSolution {
  Verdict verdict = Verdict::inconclusive;
  sdp::SdpSolution sdp;
  std::vector<double> atom_values;
  std::map<std::string, poly::Polynomial> polynomials;
  std::map<std::string, Eigen::MatrixXd> grams;
  std::map<std::string, GramSummary> gram_summaries;
  std::map<std::string, double> scalars;
  /// Largest coefficient of any identity evaluated at the solution.
  double max_identity_residual = 0.0;
  std::vector<double> identity_residuals;
  int rows = 0;
  double solve_seconds = 0.0;
};

/// Sum-of-squares program over a fixed list of indeterminates.
class SosProgram {
 public:
  explicit SosProgram(poly::VariableList indeterminates);

  const poly::VariableList& indeterminates() const { return vars_; }
  std::size_t nvars() const { return vars_.size(); }

  PolyVariable new_poly_var(const std::string& name, int degree);
  PolyVariable new_poly_var(const std::string& name, MonomialBasis basis);
  /// Odd degrees are rounded up (noted in the build log).
  SosVariable new_sos_var(const std::string& name, int degree);
  SosVariable new_sos_var(const std::string& name, MonomialBasis half_basis);
  ScalarVariable new_scalar(const std::string& name, double floor);

  LinPoly lin(const PolyVariable& v) const;
  LinPoly lin(const SosVariable& v) const;
  LinPoly lin(const ScalarVariable& v) const;
  /// Data polynomial re-expressed over the indeterminates.
  LinPoly data(const poly::Polynomial& p) const;
  LinPoly constant(double c) const;

  /// Requires expr == 0 identically (coefficient matching on every monomial).
  void add_identity(const LinPoly& expr, const std::string& label);
  /// Requires expr to be SOS by introducing a Gram variable of degree
  /// deg(expr) rounded up to even (or `degree` if larger).
  SosVariable add_sos_constraint(const LinPoly& expr, const std::string& label, int degree = -1);

  CompiledProgram compile() const;
  SosSolution solve(const sdp::SolverOptions& opts = {}) const;

  const std::vector<IdentityInfo>& identities() const { return identities_; }
  const std::vector<PolyVariable>& poly_vars() const { return poly_vars_; }
  const std::vector<SosVariable>& sos_vars() const { return sos_vars_; }
  const std::vector<ScalarVariable>& scalar_vars() const { return scalars_; }
  const std::vector<std::string>& log() const { return log_; }
  std::size_t atom_count() const { return atom_count_; }
  int block_count() const { return static_cast<int>(block_sizes_.size()); }
  int free_count() const { return free_count_; }

  /// Gram entry atom for row <= col.
  static AtomId gram_atom(const SosVariable& v, std::size_t row, std::size_t col);

 private:
  struct AtomInfo {
    enum Kind { constant, free, gram } kind;
    int index;  // free slot or block
    int row;
    int col;
  };

  void check_name(const std::string& name);

  poly::VariableList vars_;
  std::vector<AtomInfo> atoms_;
  std::size_t atom_count_ = 1;
  std::vector<int> block_sizes_;
  int free_count_ = 0;
  std::vector<PolyVariable> poly_vars_;
  std::vector<SosVariable> sos_vars_;
  std::vector<ScalarVariable> scalars_;
  std::vector<IdentityInfo> identities_;
  std::vector<std::string> log_;
  std::map<std::string, int> names_;
};

/// Result of a standalone SOS test.
struct SosCheck {
  enum class Outcome { sos, not_sos, inconclusive } outcome = Outcome::inconclusive;
  Eigen::MatrixXd gram;
  MonomialBasis basis;
  /// Dual ray (normalized b'y = 1) when not_sos was decided by the solver.
  Eigen::VectorXd ray;
  bool ray_verified = false;
  /// Largest coefficient of p - Z'QZ.
  double reconstruction_error = 0.0;
  std::string note;
  sdp::SdpSolution sdp;
};

std::string to_string(SosCheck::Outcome o);

SosCheck check_sos(const poly::Polynomial& p, const sdp::SolverOptions& opts = {});

/// Z' Q Z as a polynomial over `variables`.
poly::Polynomial gram_polynomial(const MonomialBasis& basis, const Eigen::MatrixXd& Q,
                                 const poly::VariableList& variables);

GramSummary summarize_gram(const Eigen::MatrixXd& Q, double threshold = 1e-8);

/// Certificate serialization: every polynomial and SOS variable as
/// {variables, monomials (exponent lists), coefficients} with Gram summaries
/// for SOS variables, plus scalars.
nlohmann::json to_json(const SosProgram& prog, const SosSolution& sol);

/// Exponent lists and coefficients of a polynomial.
nlohmann::json polynomial_json(const poly::Polynomial& p);

}  // namespace zenosos::sos
