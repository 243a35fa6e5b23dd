#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenosos/poly/polynomial.hpp"

namespace zenosos::hybrid {

using poly::Polynomial;
using poly::PolyVector;
using poly::VariableList;

inline constexpr double kMembershipTol = 1e-8;

class SystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {x : inequalities >= 0, equalities = 0}.
struct SemialgebraicSet {
  std::vector<Polynomial> inequalities;
  std::vector<Polynomial> equalities;

  bool empty() const { return inequalities.empty() && equalities.empty(); }
  bool contains(std::span<const double> point, double tol = kMembershipTol) const;
  /// min over inequalities and -|equalities|; +inf for the whole space.
  double margin(std::span<const double> point) const;
};

struct Mode {
  std::string id;
  /// Basic pieces whose union is the domain.
  std::vector<SemialgebraicSet> domain_pieces;
  PolyVector field;
  SemialgebraicSet neighborhood;
  bool default_neighborhood = false;

  bool in_domain(std::span<const double> point, double tol = kMembershipTol) const;
  /// Largest piece margin.
  double domain_margin(std::span<const double> point) const;
};

struct Edge {
  std::string source;
  std::string target;
  Polynomial guard_equality;
  std::vector<Polynomial> guard_inequalities;
  PolyVector reset;
  /// Sign of guard_equality on the source-domain side of the guard surface
  /// (0 when it cannot be read off the domain description).
  int interior_sign = 0;

  bool guard_holds(std::span<const double> point, double tol = kMembershipTol) const;
};

/// Polynomial hybrid automaton. Every polynomial is expressed over
/// all_variables() = state followed by parameters.
struct HybridSystem {
  std::string name;
  std::string comment;
  VariableList state;
  VariableList parameters;
  SemialgebraicSet parameter_set;
  std::vector<Mode> modes;
  std::vector<Edge> edges;
  std::map<std::string, std::vector<double>> zeno_equilibrium;
  std::map<std::string, double> constants;
  /// Parameters fixed to numbers when the system was instantiated.
  std::map<std::string, double> fixed_parameters;
  /// Document the system was loaded from (for re-instantiation).
  nlohmann::json source;

  std::size_t dimension() const { return state.size(); }
  VariableList all_variables() const;
  bool parameterized() const { return !parameters.empty(); }
  int mode_index(const std::string& id) const;
  const Mode& mode(const std::string& id) const;
  std::vector<int> out_edges(const std::string& mode_id) const;
  bool has_zeno_equilibrium() const { return !zeno_equilibrium.empty(); }
  /// True when some f_q(z_q) vanishes identically (a classical equilibrium
  /// rather than a Zeno one).
  bool zeno_point_is_equilibrium() const;

  /// Substitutes numeric values for some parameters; they leave the
  /// parameter list and the parameter-set constraints are dropped once no
  /// parameter remains. Values outside the parameter set throw unless
  /// `enforce_set` is false.
  HybridSystem with_parameters(const std::map<std::string, double>& values, bool enforce_set = true) const;
};

/// Names in `overrides` may be constants (replacing the file value) or
/// declared parameters (fixed numerically).
HybridSystem load_system(const nlohmann::json& doc,
                         const std::map<std::string, double>& overrides = {});
HybridSystem load_system_file(const std::string& path,
                              const std::map<std::string, double>& overrides = {});
/// Re-instantiates from the stored source document with extra overrides.
HybridSystem reinstantiate(const HybridSystem& sys,
                           const std::map<std::string, double>& overrides);

struct ValidationReport {
  bool cyclic = false;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const HybridSystem& sys);

/// Modes in cycle order starting from the first declared mode; empty when
/// the system is not cyclic.
std::vector<int> cycle_order(const HybridSystem& sys);

}  // namespace zenosos::hybrid
