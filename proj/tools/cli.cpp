#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "zenosos/hybrid/simulate.hpp"
#include "zenosos/poly/parser.hpp"
#include "zenosos/sos/program.hpp"
#include "zenosos/zeno/studies.hpp"
#include "zenosos/zeno/synthesis.hpp"

namespace zenosos::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected name=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::map<std::string, double> assignments(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& it : items) {
    auto [k, v] = split_assignment(it);
    out[k] = parse_number(v);
  }
  return out;
}

/// name=lo:hi:n (inclusive, evenly spaced) or name=v1,v2,...
zeno::SweepAxis parse_axis(const std::string& s) {
  auto [name, rhs] = split_assignment(s);
  zeno::SweepAxis a;
  a.name = name;
  if (rhs.find(':') != std::string::npos) {
    auto parts = split(rhs, ':');
    if (parts.size() != 3) throw UsageError("grid axis must be name=lo:hi:n, got '" + s + "'");
    const double lo = parse_number(parts[0]);
    const double hi = parse_number(parts[1]);
    const double n = parse_number(parts[2]);
    if (n < 1 || n != std::floor(n)) throw UsageError("grid count must be a positive integer in '" + s + "'");
    const int count = static_cast<int>(n);
    for (int k = 0; k < count; ++k) {
      const double v = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
      // Snap to 15 significant digits so decimal grids land on their decimal values.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.15g", v);
      a.values.push_back(std::strtod(buf, nullptr));
    }
  } else {
    for (const auto& v : split(rhs, ',')) a.values.push_back(parse_number(v));
  }
  if (a.values.empty()) throw UsageError("grid axis " + name + " has no values");
  return a;
}

zeno::SweepRange parse_range(const std::string& s) {
  auto [name, rhs] = split_assignment(s);
  auto parts = split(rhs, ':');
  if (parts.size() != 2) throw UsageError("range must be name=lo:hi, got '" + s + "'");
  return {name, parse_number(parts[0]), parse_number(parts[1])};
}

struct SynthesisFlags {
  int degree = 6;
  std::string rq_grid;
  std::vector<std::string> fixed_r;
  int max_degree = 0;
  int slack = 0;
  int samples = 10000;
  std::uint64_t seed = 1;
  bool solver_trace = false;

  void attach(CLI::App* app) {
    app->add_option("--degree", degree, "Lyapunov degree (even)")->capture_default_str();
    app->add_option("--rq-grid", rq_grid, "Comma-separated r values tried for the contracting mode");
    app->add_option("--fixed-r", fixed_r, "Fixed r per mode, mode=value (repeatable)");
    app->add_option("--max-degree", max_degree, "Retry at degree+2 up to this degree")->capture_default_str();
    app->add_option("--multiplier-slack", slack, "Extra degree for multiplier targets")->capture_default_str();
    app->add_option("--samples", samples, "Post-verification samples")->capture_default_str();
    app->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    app->add_flag("--solver-trace", solver_trace, "Print interior-point iterations to stderr");
  }

  zeno::SynthesisConfig config() const {
    zeno::SynthesisConfig c;
    c.degree = degree;
    if (!rq_grid.empty()) {
      c.r_grid.clear();
      for (const auto& v : split(rq_grid, ',')) c.r_grid.push_back(parse_number(v));
    }
    c.fixed_r = assignments(fixed_r);
    c.max_degree = max_degree;
    c.multiplier_degree_slack = slack;
    c.post_samples = samples;
    c.seed = seed;
    c.solver.verbose = solver_trace;
    if (degree < 2 || degree % 2 != 0) throw UsageError("--degree must be even and at least 2");
    for (double r : c.r_grid) {
      if (!(r > 0.0 && r < 1.0)) throw UsageError("--rq-grid values must lie in (0, 1)");
    }
    return c;
  }
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

RunManifest start_manifest(const std::string& command, const std::string& file, nlohmann::json config) {
  RunManifest m;
  m.command = command;
  m.input = file;
  m.input_hash = file_hash(file);
  m.config = std::move(config);
  m.started = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& out, const Timer& t) {
  m.wall_seconds = t.seconds();
  if (!out.empty()) write_text(manifest_path_for(out), m.to_json().dump(2) + "\n");
}

hybrid::HybridSystem load(const std::string& file, const std::vector<std::string>& sets) {
  return hybrid::load_system_file(file, assignments(sets));
}

int exit_for(zeno::Outcome o) {
  switch (o) {
    case zeno::Outcome::certified: return kOk;
    case zeno::Outcome::no_certificate: return kNegative;
    case zeno::Outcome::inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

// ---------------------------------------------------------------------------

struct VerifyCmd {
  std::string file;
  std::vector<std::string> sets;
  std::string out;
  SynthesisFlags flags;

  void attach(CLI::App& root) {
    auto* c = root.add_subcommand("verify", "Search for a Zeno stability certificate");
    c->add_option("system", file, "System file")->required();
    c->add_option("--set", sets, "Override a constant or fix a parameter, name=value (repeatable)");
    c->add_option("--out", out, "Certificate JSON (written when certified)");
    flags.attach(c);
    c->callback([this] { ran = true; });
  }

  int run(std::ostream& out_s) const {
    Timer timer;
    auto sys = load(file, sets);
    auto cfg = flags.config();
    nlohmann::json echo = cfg.to_json();
    echo["set"] = assignments(sets);
    auto manifest = start_manifest("verify", file, echo);
    auto res = zeno::verify(sys, cfg);

    out_s << "system " << sys.name << "\n";
    for (const auto& a : res.attempts) {
      out_s << "  degree " << a.degree << " r";
      for (const auto& [q, r] : a.r) out_s << " " << q << "=" << poly::format_double(r);
      out_s << ": " << sos::to_string(a.verdict) << " (" << a.sdp_status << ", " << a.iterations
            << " iterations, " << a.rows << " rows)";
      if (!a.note.empty()) out_s << " " << a.note;
      out_s << "\n";
    }
    for (const auto& d : res.diagnostics) out_s << "  note: " << d << "\n";
    out_s << "outcome " << zeno::to_string(res.outcome) << "\n";
    if (res.certificate) {
      const auto& c = *res.certificate;
      out_s << "alpha " << poly::format_double(c.alpha) << " gamma " << poly::format_double(c.gamma)
            << " identity-residual " << poly::format_double(c.max_identity_residual) << " sampling "
            << (c.sampling.passed ? "passed" : "failed") << " (" << c.sampling.samples << " samples, "
            << c.sampling.guard_samples << " guard samples)\n";
    }

    manifest.outcome = {{"outcome", zeno::to_string(res.outcome)},
                        {"attempts", res.attempts.size()},
                        {"sdp_iterations", res.sdp_iterations}};
    if (!out.empty()) {
      if (res.certificate) {
        nlohmann::json j = res.certificate->to_json();
        j["manifest"] = manifest.id();
        j["outcome"] = zeno::to_string(res.outcome);
        j["system_constants"] = sys.constants;
        j["fixed_parameters"] = sys.fixed_parameters;
        j["config"] = echo;
        write_text(out, j.dump(2) + "\n");
        out_s << "certificate written to " << out << "\n";
      }
      finish_manifest(manifest, out, timer);
    }
    return exit_for(res.outcome);
  }

  bool ran = false;
};

struct SimulateCmd {
  std::string file;
  std::vector<std::string> init;
  std::vector<std::string> params;
  std::vector<std::string> sets;
  double horizon = 50.0;
  double sample_dt = 0.0;
  int max_transitions = 100000;
  std::string out;
  bool ran = false;

  void attach(CLI::App& root) {
    auto* c = root.add_subcommand("simulate", "Simulate one execution");
    c->add_option("system", file, "System file")->required();
    c->add_option("--init", init, "Initial mode followed by the state")->required()->expected(2, 64);
    c->add_option("--params", params, "Parameter values, name=value (repeatable)");
    c->add_option("--set", sets, "Override a constant, name=value (repeatable)");
    c->add_option("--horizon", horizon, "Time horizon")->capture_default_str();
    c->add_option("--sample-dt", sample_dt, "Sample spacing inside intervals (0 = solver steps)");
    c->add_option("--max-transitions", max_transitions, "Transition cap")->capture_default_str();
    c->add_option("--out", out, "Trajectory CSV (stdout when omitted)");
    c->callback([this] { ran = true; });
  }

  int run(std::ostream& out_s) const {
    Timer timer;
    auto sys = load(file, sets);
    const std::string mode = init.front();
    std::vector<double> x0;
    for (std::size_t k = 1; k < init.size(); ++k) x0.push_back(parse_number(init[k]));
    hybrid::SimOptions opts;
    opts.horizon = horizon;
    opts.sample_dt = sample_dt;
    opts.max_transitions = max_transitions;
    const auto pv = assignments(params);
    nlohmann::json echo = {{"init", init}, {"params", pv}, {"set", assignments(sets)}, {"horizon", horizon},
                           {"sample_dt", sample_dt}, {"max_transitions", max_transitions}};
    auto manifest = start_manifest("simulate", file, echo);
    hybrid::Execution ex;
    try {
      ex = hybrid::simulate(sys, mode, x0, pv, opts);
    } catch (const hybrid::SystemError& e) {
      throw UsageError(std::string("invalid initial condition: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("invalid initial condition: ") + e.what());
    }

    std::ostringstream csv;
    if (!out.empty()) csv << "# manifest=" << manifest.id() << "\n";
    csv << "t,mode";
    for (const auto& v : sys.state) csv << "," << v;
    csv << "\n";
    for (const auto& iv : ex.intervals) {
      for (const auto& s : iv.samples) {
        csv << poly::format_double(s.t) << "," << iv.mode;
        for (double v : s.x) csv << "," << poly::format_double(v);
        csv << "\n";
      }
    }
    std::ostringstream verdict;
    verdict << "verdict=" << hybrid::to_string(ex.verdict) << " transitions=" << ex.transitions.size()
            << " zeno_time=" << (ex.zeno_time_estimate ? poly::format_double(*ex.zeno_time_estimate) : "none");
    csv << "# " << verdict.str() << "\n";
    if (out.empty()) {
      out_s << csv.str();
    } else {
      write_text(out, csv.str());
    }
    for (const auto& w : ex.warnings) out_s << "warning: " << w << "\n";
    out_s << verdict.str() << "\n";
    manifest.outcome = {{"verdict", hybrid::to_string(ex.verdict)},
                        {"transitions", ex.transitions.size()},
                        {"zeno_time", ex.zeno_time_estimate ? nlohmann::json(*ex.zeno_time_estimate) : nlohmann::json()}};
    finish_manifest(manifest, out, timer);
    return kOk;
  }
};

struct SweepCmd {
  std::string file;
  std::vector<std::string> grid;
  int mc = 0;
  std::vector<std::string> ranges;
  std::vector<std::string> sets;
  int workers = 0;
  std::uint64_t mc_seed = 1;
  std::string out;
  SynthesisFlags flags;
  bool ran = false;

  void attach(CLI::App& root) {
    auto* c = root.add_subcommand("sweep", "Verify over a parameter grid or random draws");
    c->add_option("system", file, "System file")->required();
    auto* g = c->add_option("--grid", grid, "Axis name=lo:hi:n or name=v1,v2,... (repeatable)");
    auto* m = c->add_option("--mc", mc, "Number of Monte-Carlo draws");
    c->add_option("--range", ranges, "Monte-Carlo range name=lo:hi (repeatable)");
    c->add_option("--mc-seed", mc_seed, "Monte-Carlo seed")->capture_default_str();
    c->add_option("--set", sets, "Fixed overrides, name=value (repeatable)");
    c->add_option("--workers", workers, "Concurrent probes (0 = hardware)");
    c->add_option("--out", out, "Sweep CSV (stdout when omitted)");
    g->excludes(m);
    flags.attach(c);
    c->callback([this] { ran = true; });
  }

  int run(std::ostream& out_s) const {
    Timer timer;
    auto sys = load(file, sets);
    auto cfg = flags.config();
    zeno::SweepSpec spec;
    for (const auto& a : grid) spec.grid.push_back(parse_axis(a));
    spec.monte_carlo = mc;
    for (const auto& r : ranges) spec.ranges.push_back(parse_range(r));
    spec.seed = mc_seed;
    spec.workers = workers;
    if (spec.grid.empty() && spec.monte_carlo <= 0) throw UsageError("sweep needs --grid or --mc");
    if (spec.monte_carlo > 0 && spec.ranges.empty()) throw UsageError("--mc needs at least one --range");
    nlohmann::json echo = cfg.to_json();
    echo["grid"] = grid;
    echo["mc"] = mc;
    echo["ranges"] = ranges;
    echo["mc_seed"] = mc_seed;
    echo["set"] = assignments(sets);
    auto manifest = start_manifest("sweep", file, echo);
    auto res = zeno::sweep(sys, cfg, spec);
    std::ostringstream csv;
    res.write_csv(csv, out.empty() ? std::string{} : manifest.id());
    int counts[3] = {0, 0, 0};
    for (const auto& p : res.points) ++counts[static_cast<int>(p.verdict)];
    if (out.empty()) {
      out_s << csv.str();
    } else {
      write_text(out, csv.str());
      out_s << res.points.size() << " points: " << counts[0] << " feasible, " << counts[1] << " infeasible, "
            << counts[2] << " inconclusive\n";
    }
    manifest.outcome = {{"points", res.points.size()},
                        {"feasible", counts[0]},
                        {"infeasible", counts[1]},
                        {"inconclusive", counts[2]}};
    finish_manifest(manifest, out, timer);
    return kOk;
  }
};

struct BisectCmd {
  std::string file;
  std::string param;
  std::vector<double> bracket;
  std::string direction = "max";
  double tol = 1e-2;
  std::vector<std::string> sets;
  std::string out;
  SynthesisFlags flags;
  bool ran = false;

  void attach(CLI::App& root) {
    auto* c = root.add_subcommand("bisect", "Bisect a bound for which a certificate exists");
    c->add_option("system", file, "System file")->required();
    c->add_option("--param", param, "Constant or parameter to bisect")->required();
    c->add_option("--bracket", bracket, "Bracket lo hi")->required()->expected(2);
    c->add_option("--direction", direction, "max or min")->capture_default_str();
    c->add_option("--tol", tol, "Bracket width at termination")->capture_default_str();
    c->add_option("--set", sets, "Fixed overrides, name=value (repeatable)");
    c->add_option("--out", out, "Bisection JSON");
    flags.attach(c);
    c->callback([this] { ran = true; });
  }

  int run(std::ostream& out_s) const {
    Timer timer;
    if (!(bracket[0] < bracket[1])) throw UsageError("--bracket needs lo < hi");
    if (!(tol > 0.0)) throw UsageError("--tol must be positive");
    zeno::Direction dir;
    try {
      dir = zeno::parse_direction(direction);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto sys = load(file, sets);
    auto cfg = flags.config();
    zeno::BisectOptions opts;
    opts.name = param;
    opts.lo = bracket[0];
    opts.hi = bracket[1];
    opts.direction = dir;
    opts.tol = tol;
    nlohmann::json echo = cfg.to_json();
    echo["param"] = param;
    echo["bracket"] = bracket;
    echo["direction"] = zeno::to_string(dir);
    echo["tol"] = tol;
    echo["set"] = assignments(sets);
    auto manifest = start_manifest("bisect", file, echo);
    auto res = zeno::bisect(sys, cfg, opts);
    for (const auto& p : res.probes) {
      out_s << "  " << param << "=" << poly::format_double(p.value) << ": " << zeno::to_string(p.verdict) << " ("
            << poly::format_double(p.seconds) << " s)\n";
    }
    for (const auto& n : res.notes) out_s << "  note: " << n << "\n";
    if (res.established) {
      out_s << "bound " << poly::format_double(res.bound) << "\n";
    } else {
      out_s << "bound none\n";
    }
    if (!out.empty()) {
      nlohmann::json j = res.to_json();
      j["manifest"] = manifest.id();
      write_text(out, j.dump(2) + "\n");
    }
    manifest.outcome = {{"established", res.established},
                        {"monotone", res.monotone},
                        {"bound", res.established ? nlohmann::json(res.bound) : nlohmann::json()}};
    finish_manifest(manifest, out, timer);
    if (!res.monotone) return kInconclusive;
    return res.established ? kOk : kNegative;
  }
};

struct CheckSosCmd {
  std::string expr;
  std::string vars;
  bool gram = false;
  bool ran = false;

  void attach(CLI::App& root) {
    auto* c = root.add_subcommand("check-sos", "Test whether a polynomial is a sum of squares");
    c->add_option("polynomial", expr, "Polynomial expression")->required();
    c->add_option("--vars", vars, "Comma-separated variables")->required();
    c->add_flag("--gram", gram, "Print the Gram matrix and basis as JSON");
    c->callback([this] { ran = true; });
  }

  int run(std::ostream& out_s) const {
    poly::VariableList vl;
    for (const auto& v : split(vars, ',')) {
      if (!v.empty()) vl.push_back(v);
    }
    poly::Polynomial p;
    try {
      p = poly::parse(expr, vl);
    } catch (const poly::ParseError& e) {
      throw UsageError(std::string("parse error: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto res = sos::check_sos(p);
    out_s << sos::to_string(res.outcome);
    if (!res.note.empty()) out_s << " (" << res.note << ")";
    out_s << "\n";
    if (res.outcome == sos::SosCheck::Outcome::not_sos) {
      out_s << "dual ray " << (res.ray_verified ? "verified" : "not verified") << "\n";
    }
    if (gram && res.outcome == sos::SosCheck::Outcome::sos) {
      nlohmann::json j;
      auto& basis = j["basis"] = nlohmann::json::array();
      for (const auto& m : res.basis.entries) basis.push_back(poly::to_string(poly::Polynomial(vl, poly::Polynomial::TermMap{{m, 1.0}})));
      auto& rows = j["gram"] = nlohmann::json::array();
      for (Eigen::Index i = 0; i < res.gram.rows(); ++i) {
        std::vector<double> row(res.gram.cols());
        for (Eigen::Index k = 0; k < res.gram.cols(); ++k) row[k] = res.gram(i, k);
        rows.push_back(row);
      }
      j["reconstruction_error"] = res.reconstruction_error;
      out_s << j.dump(2) << "\n";
    }
    switch (res.outcome) {
      case sos::SosCheck::Outcome::sos: return kOk;
      case sos::SosCheck::Outcome::not_sos: return kNegative;
      case sos::SosCheck::Outcome::inconclusive: return kInconclusive;
    }
    return kInconclusive;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zeno stability certificates for cyclic hybrid systems", "zenosos"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  VerifyCmd verify;
  SimulateCmd simulate;
  SweepCmd sweep;
  BisectCmd bisect;
  CheckSosCmd check;
  verify.attach(app);
  simulate.attach(app);
  sweep.attach(app);
  bisect.attach(app);
  check.attach(app);

  std::vector<std::string> argv_store{"zenosos"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (verify.ran) return verify.run(out);
    if (simulate.ran) return simulate.run(out);
    if (sweep.ran) return sweep.run(out);
    if (bisect.ran) return bisect.run(out);
    if (check.ran) return check.run(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const hybrid::SystemError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const poly::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  err << "error: no subcommand\n";
  return kUsage;
}

}  // namespace zenosos::cli
