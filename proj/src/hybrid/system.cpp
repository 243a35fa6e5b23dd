#include "zenosos/hybrid/system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "zenosos/poly/parser.hpp"

namespace zenosos::hybrid {

namespace {

using nlohmann::json;

std::string id_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw SystemError("mode id must be a string or an integer");
}

std::vector<std::string> string_list(const json& j, const char* what) {
  if (!j.is_array()) throw SystemError(std::string(what) + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw SystemError(std::string(what) + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

/// Parses expressions over state ++ parameters ++ constants, then folds the
/// constants and the fixed parameters in.
struct ExprContext {
  VariableList parse_vars;
  std::map<std::string, double> folded;

  Polynomial operator()(const json& j, const std::string& where) const {
    std::string text;
    if (j.is_string()) {
      text = j.get<std::string>();
    } else if (j.is_number()) {
      text = poly::format_double(j.get<double>());
    } else {
      throw SystemError(where + ": expression must be a string or a number");
    }
    try {
      return poly::substitute(poly::parse(text, parse_vars), folded);
    } catch (const poly::ParseError& e) {
      throw SystemError(where + ": " + e.what() + " at position " + std::to_string(e.position()) +
                        " in '" + text + "'");
    }
  }

  std::vector<Polynomial> list(const json& j, const std::string& where) const {
    std::vector<Polynomial> out;
    if (j.is_null()) return out;
    if (!j.is_array()) throw SystemError(where + " must be an array");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back((*this)(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

  SemialgebraicSet set(const json& j, const std::string& where) const {
    SemialgebraicSet s;
    if (j.is_null()) return s;
    if (!j.is_object()) throw SystemError(where + " must be an object");
    if (j.contains("inequalities")) s.inequalities = list(j["inequalities"], where + ".inequalities");
    if (j.contains("equalities")) s.equalities = list(j["equalities"], where + ".equalities");
    return s;
  }
};

/// k with a = k*b, or 0 when a and b are not proportional.
double proportionality(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero() || a.size() != b.size()) return 0.0;
  double k = 0.0;
  for (const auto& [m, c] : b.terms()) {
    const double ca = a.coefficient(m);
    if (ca == 0.0) return 0.0;
    const double r = ca / c;
    if (k == 0.0) {
      k = r;
    } else if (std::abs(r - k) > 1e-12 * std::abs(k)) {
      return 0.0;
    }
  }
  return k;
}

int interior_sign(const Edge& e, const Mode& source) {
  int sign = 0;
  for (const auto& piece : source.domain_pieces) {
    for (const auto& g : piece.inequalities) {
      const double k = proportionality(g, e.guard_equality);
      if (k == 0.0) continue;
      const int s = k > 0 ? 1 : -1;
      if (sign != 0 && sign != s) return 0;
      sign = s;
    }
  }
  return sign;
}

Polynomial ball(const VariableList& state, const VariableList& all, double radius2) {
  Polynomial w = Polynomial::constant(radius2, all);
  for (const auto& v : state) {
    auto x = Polynomial::variable(v, all);
    w = w - x * x;
  }
  return w;
}

}  // namespace

bool SemialgebraicSet::contains(std::span<const double> point, double tol) const {
  for (const auto& g : inequalities) {
    if (poly::evaluate(g, point) < -tol) return false;
  }
  for (const auto& h : equalities) {
    if (std::abs(poly::evaluate(h, point)) > tol) return false;
  }
  return true;
}

double SemialgebraicSet::margin(std::span<const double> point) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& g : inequalities) m = std::min(m, poly::evaluate(g, point));
  for (const auto& h : equalities) m = std::min(m, -std::abs(poly::evaluate(h, point)));
  return m;
}

bool Mode::in_domain(std::span<const double> point, double tol) const {
  if (domain_pieces.empty()) return true;
  return std::any_of(domain_pieces.begin(), domain_pieces.end(),
                     [&](const SemialgebraicSet& s) { return s.contains(point, tol); });
}

double Mode::domain_margin(std::span<const double> point) const {
  if (domain_pieces.empty()) return std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& s : domain_pieces) m = std::max(m, s.margin(point));
  return m;
}

bool Edge::guard_holds(std::span<const double> point, double tol) const {
  return std::all_of(guard_inequalities.begin(), guard_inequalities.end(),
                     [&](const Polynomial& h) { return poly::evaluate(h, point) >= -tol; });
}

VariableList HybridSystem::all_variables() const {
  VariableList out = state;
  out.insert(out.end(), parameters.begin(), parameters.end());
  return out;
}

int HybridSystem::mode_index(const std::string& id) const {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

const Mode& HybridSystem::mode(const std::string& id) const {
  const int i = mode_index(id);
  if (i < 0) throw SystemError("unknown mode '" + id + "'");
  return modes[i];
}

std::vector<int> HybridSystem::out_edges(const std::string& mode_id) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].source == mode_id) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool HybridSystem::zeno_point_is_equilibrium() const {
  for (const auto& m : modes) {
    auto it = zeno_equilibrium.find(m.id);
    if (it == zeno_equilibrium.end() || it->second.size() != state.size()) continue;
    std::map<std::string, double> at;
    for (std::size_t i = 0; i < state.size(); ++i) at[state[i]] = it->second[i];
    bool all_zero = true;
    for (const auto& f : m.field.components) {
      if (poly::substitute(f, at).max_abs_coefficient() > kMembershipTol) all_zero = false;
    }
    if (all_zero) return true;
  }
  return false;
}

HybridSystem HybridSystem::with_parameters(const std::map<std::string, double>& values, bool enforce_set) const {
  HybridSystem out = *this;
  for (const auto& [name, v] : values) {
    if (std::find(parameters.begin(), parameters.end(), name) == parameters.end()) {
      throw SystemError("'" + name + "' is not a parameter");
    }
    out.fixed_parameters[name] = v;
  }
  std::erase_if(out.parameters, [&](const std::string& n) { return values.count(n) != 0; });
  auto sub = [&](const Polynomial& p) { return poly::substitute(p, values); };
  auto sub_set = [&](SemialgebraicSet& s) {
    for (auto& g : s.inequalities) g = sub(g);
    for (auto& h : s.equalities) h = sub(h);
  };
  for (auto& m : out.modes) {
    for (auto& piece : m.domain_pieces) sub_set(piece);
    sub_set(m.neighborhood);
    m.field = poly::substitute(m.field, values);
  }
  for (auto& e : out.edges) {
    e.guard_equality = sub(e.guard_equality);
    for (auto& h : e.guard_inequalities) h = sub(h);
    e.reset = poly::substitute(e.reset, values);
  }
  sub_set(out.parameter_set);
  if (out.parameters.empty()) {
    for (const auto& g : out.parameter_set.inequalities) {
      if (enforce_set && g.constant_term() < -kMembershipTol) {
        throw SystemError("fixed parameter values lie outside the parameter set");
      }
    }
    out.parameter_set = {};
  }
  return out;
}

HybridSystem load_system(const json& doc, const std::map<std::string, double>& overrides) {
  if (!doc.is_object()) throw SystemError("system document must be a JSON object");
  HybridSystem sys;
  sys.source = doc;
  sys.name = doc.value("name", std::string{});
  sys.comment = doc.value("comment", std::string{});
  if (!doc.contains("variables")) throw SystemError("missing 'variables'");
  sys.state = string_list(doc["variables"], "variables");
  if (sys.state.empty()) throw SystemError("'variables' is empty");
  if (doc.contains("parameters")) sys.parameters = string_list(doc["parameters"], "parameters");
  if (doc.contains("constants")) {
    if (!doc["constants"].is_object()) throw SystemError("'constants' must be an object");
    for (const auto& [k, v] : doc["constants"].items()) {
      if (!v.is_number()) throw SystemError("constant '" + k + "' must be a number");
      sys.constants[k] = v.get<double>();
    }
  }
  std::map<std::string, double> fixed;
  for (const auto& [k, v] : overrides) {
    if (sys.constants.count(k)) {
      sys.constants[k] = v;
    } else if (std::find(sys.parameters.begin(), sys.parameters.end(), k) != sys.parameters.end()) {
      fixed[k] = v;
    } else {
      throw SystemError("'" + k + "' is neither a constant nor a parameter");
    }
  }
  std::set<std::string> seen;
  VariableList parse_vars = sys.state;
  parse_vars.insert(parse_vars.end(), sys.parameters.begin(), sys.parameters.end());
  for (const auto& [k, v] : sys.constants) parse_vars.push_back(k);
  for (const auto& n : parse_vars) {
    if (!seen.insert(n).second) throw SystemError("name '" + n + "' declared twice");
  }
  ExprContext ctx{parse_vars, sys.constants};
  const VariableList all = sys.all_variables();

  if (doc.contains("parameter_set")) sys.parameter_set = ctx.set(doc["parameter_set"], "parameter_set");
  if (!sys.parameter_set.empty() && sys.parameters.empty()) {
    throw SystemError("'parameter_set' given without 'parameters'");
  }

  if (!doc.contains("modes") || !doc["modes"].is_array() || doc["modes"].empty()) {
    throw SystemError("'modes' must be a non-empty array");
  }
  for (std::size_t i = 0; i < doc["modes"].size(); ++i) {
    const auto& jm = doc["modes"][i];
    const std::string where = "modes[" + std::to_string(i) + "]";
    if (!jm.contains("id")) throw SystemError(where + ": missing id");
    Mode m;
    m.id = id_string(jm["id"]);
    if (sys.mode_index(m.id) >= 0) throw SystemError("duplicate mode id '" + m.id + "'");
    SemialgebraicSet common = jm.contains("domain") ? ctx.set(jm["domain"], where + ".domain")
                                                    : SemialgebraicSet{};
    if (jm.contains("domain_pieces")) {
      const auto& jp = jm["domain_pieces"];
      if (!jp.is_array() || jp.empty()) throw SystemError(where + ".domain_pieces must be a non-empty array");
      for (std::size_t k = 0; k < jp.size(); ++k) {
        SemialgebraicSet piece = ctx.set(jp[k], where + ".domain_pieces[" + std::to_string(k) + "]");
        piece.inequalities.insert(piece.inequalities.begin(), common.inequalities.begin(),
                                  common.inequalities.end());
        piece.equalities.insert(piece.equalities.begin(), common.equalities.begin(),
                                common.equalities.end());
        m.domain_pieces.push_back(std::move(piece));
      }
    } else {
      m.domain_pieces.push_back(std::move(common));
    }
    if (!jm.contains("field")) throw SystemError(where + ": missing field");
    m.field = PolyVector(ctx.list(jm["field"], where + ".field"));
    if (jm.contains("neighborhood")) {
      m.neighborhood = ctx.set(jm["neighborhood"], where + ".neighborhood");
    } else {
      m.neighborhood.inequalities.push_back(ball(sys.state, all, 25.0));
      m.default_neighborhood = true;
    }
    sys.modes.push_back(std::move(m));
  }

  if (!doc.contains("edges") || !doc["edges"].is_array()) throw SystemError("'edges' must be an array");
  for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
    const auto& je = doc["edges"][i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    Edge e;
    if (!je.contains("source") || !je.contains("target")) throw SystemError(where + ": missing source/target");
    e.source = id_string(je["source"]);
    e.target = id_string(je["target"]);
    if (sys.mode_index(e.source) < 0 || sys.mode_index(e.target) < 0) {
      throw SystemError(where + ": unknown mode");
    }
    if (!je.contains("guard") || !je["guard"].contains("equality")) {
      throw SystemError(where + ": guard needs exactly one 'equality'");
    }
    const auto& jg = je["guard"];
    if (jg["equality"].is_array()) throw SystemError(where + ": guard needs exactly one 'equality'");
    e.guard_equality = ctx(jg["equality"], where + ".guard.equality");
    if (jg.contains("inequalities")) e.guard_inequalities = ctx.list(jg["inequalities"], where + ".guard.inequalities");
    if (!je.contains("reset")) throw SystemError(where + ": missing reset");
    e.reset = PolyVector(ctx.list(je["reset"], where + ".reset"));
    e.interior_sign = interior_sign(e, sys.mode(e.source));
    sys.edges.push_back(std::move(e));
  }

  if (doc.contains("zeno_equilibrium")) {
    const auto& jz = doc["zeno_equilibrium"];
    if (!jz.is_object()) throw SystemError("'zeno_equilibrium' must be an object");
    for (const auto& [k, v] : jz.items()) {
      if (sys.mode_index(k) < 0) throw SystemError("zeno_equilibrium: unknown mode '" + k + "'");
      sys.zeno_equilibrium[k] = v.get<std::vector<double>>();
    }
  }
  return fixed.empty() ? sys : sys.with_parameters(fixed);
}

HybridSystem load_system_file(const std::string& path, const std::map<std::string, double>& overrides) {
  std::ifstream in(path);
  if (!in) throw SystemError("cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw SystemError("'" + path + "': " + e.what());
  }
  auto sys = load_system(doc, overrides);
  if (sys.name.empty()) {
    auto slash = path.find_last_of('/');
    sys.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  }
  return sys;
}

HybridSystem reinstantiate(const HybridSystem& sys, const std::map<std::string, double>& overrides) {
  std::map<std::string, double> all = sys.fixed_parameters;
  for (const auto& [k, v] : sys.constants) all[k] = v;
  for (const auto& [k, v] : overrides) all[k] = v;
  auto out = load_system(sys.source, all);
  out.name = sys.name;
  return out;
}

}  // namespace zenosos::hybrid
