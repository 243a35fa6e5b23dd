#include <cmath>
#include <functional>
#include <sstream>

#include "zenosos/hybrid/system.hpp"
#include "zenosos/poly/parser.hpp"

namespace zenosos::hybrid {

namespace {

/// Grid points of [-10, 10]^k inside the parameter set (at most two
/// parameters); a single empty assignment for parameter-free systems.
std::vector<std::map<std::string, double>> parameter_samples(const HybridSystem& sys) {
  std::vector<std::map<std::string, double>> out;
  if (sys.parameters.empty()) {
    out.emplace_back();
    return out;
  }
  if (sys.parameters.size() > 2) return out;
  const VariableList all = sys.all_variables();
  std::vector<double> pt(all.size(), 0.0);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == sys.parameters.size()) {
      if (sys.parameter_set.contains(pt)) {
        std::map<std::string, double> m;
        for (std::size_t i = 0; i < sys.parameters.size(); ++i) m[sys.parameters[i]] = pt[sys.state.size() + i];
        out.push_back(std::move(m));
      }
      return;
    }
    for (int i = -40; i <= 40; ++i) {
      pt[sys.state.size() + k] = 0.25 * i;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

std::vector<double> point_with(const HybridSystem& sys, const std::vector<double>& x,
                               const std::map<std::string, double>& p) {
  std::vector<double> pt(x);
  for (const auto& name : sys.parameters) pt.push_back(p.at(name));
  return pt;
}

std::string vec_string(const std::vector<double>& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << poly::format_double(v[i]);
  os << ")";
  return os.str();
}

}  // namespace

std::vector<int> cycle_order(const HybridSystem& sys) {
  const std::size_t n = sys.modes.size();
  std::vector<int> out_count(n, 0), in_count(n, 0), next(n, -1);
  for (const auto& e : sys.edges) {
    const int s = sys.mode_index(e.source);
    const int t = sys.mode_index(e.target);
    ++out_count[s];
    ++in_count[t];
    next[s] = t;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out_count[i] != 1 || in_count[i] != 1) return {};
  }
  std::vector<int> order;
  std::vector<bool> seen(n, false);
  int q = 0;
  while (!seen[q]) {
    seen[q] = true;
    order.push_back(q);
    q = next[q];
  }
  if (order.size() != n) return {};
  return order;
}

ValidationReport validate(const HybridSystem& sys) {
  ValidationReport r;
  const std::size_t n = sys.dimension();
  for (const auto& m : sys.modes) {
    if (m.field.size() != n) {
      r.violations.push_back("mode " + m.id + ": field has " + std::to_string(m.field.size()) +
                             " components, state has " + std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < sys.edges.size(); ++i) {
    const auto& e = sys.edges[i];
    if (e.reset.size() != n) {
      r.violations.push_back("edge " + e.source + "->" + e.target + ": reset has " +
                             std::to_string(e.reset.size()) + " components");
    }
  }
  r.cyclic = !cycle_order(sys).empty();
  if (!r.cyclic) r.warnings.push_back("system is not cyclic");
  if (!r.violations.empty() || sys.zeno_equilibrium.empty()) return r;

  for (const auto& m : sys.modes) {
    auto it = sys.zeno_equilibrium.find(m.id);
    if (it == sys.zeno_equilibrium.end()) {
      r.violations.push_back("zeno_equilibrium: no point for mode " + m.id);
    } else if (it->second.size() != n) {
      r.violations.push_back("zeno_equilibrium: point for mode " + m.id + " has wrong dimension");
    }
  }
  if (!r.violations.empty()) return r;

  auto samples = parameter_samples(sys);
  if (samples.empty()) {
    r.warnings.push_back("parameter set not sampled; parameter-dependent checks skipped");
  }
  auto at_z = [&](const Polynomial& p, const std::vector<double>& z) {
    std::map<std::string, double> v;
    for (std::size_t i = 0; i < n; ++i) v[sys.state[i]] = z[i];
    return poly::substitute(p, v);
  };

  for (const auto& m : sys.modes) {
    const auto& z = sys.zeno_equilibrium.at(m.id);
    bool vanishes = true;
    for (const auto& f : m.field.components) {
      if (at_z(f, z).max_abs_coefficient() > kMembershipTol) vanishes = false;
    }
    if (vanishes) {
      r.warnings.push_back("mode " + m.id + ": field vanishes at z = " + vec_string(z) +
                           " (classical equilibrium)");
    }
    for (const auto& p : samples) {
      if (!m.in_domain(point_with(sys, z, p))) {
        r.violations.push_back("mode " + m.id + ": z = " + vec_string(z) + " is outside the domain");
        break;
      }
    }
  }

  for (const auto& e : sys.edges) {
    const auto& zq = sys.zeno_equilibrium.at(e.source);
    const auto& zt = sys.zeno_equilibrium.at(e.target);
    const std::string label = "edge " + e.source + "->" + e.target;
    for (std::size_t i = 0; i < n; ++i) {
      auto diff = at_z(e.reset[i], zq) - Polynomial::constant(zt[i], at_z(e.reset[i], zq).variables());
      if (diff.max_abs_coefficient() > kMembershipTol) {
        r.violations.push_back(label + ": reset does not map z_" + e.source + " to z_" + e.target);
        break;
      }
    }
    if (at_z(e.guard_equality, zq).max_abs_coefficient() > kMembershipTol) {
      r.violations.push_back(label + ": z_" + e.source + " is not on the guard surface");
    }
    for (const auto& p : samples) {
      if (!e.guard_holds(point_with(sys, zq, p))) {
        r.violations.push_back(label + ": z_" + e.source + " violates a guard inequality");
        break;
      }
    }
  }
  return r;
}

}  // namespace zenosos::hybrid
