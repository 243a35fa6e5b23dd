#include "zenosos/zeno/studies.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include "zenosos/poly/parser.hpp"

namespace zenosos::zeno {

std::string to_string(Direction d) { return d == Direction::maximize ? "max" : "min"; }

Direction parse_direction(const std::string& s) {
  if (s == "max" || s == "maximize") return Direction::maximize;
  if (s == "min" || s == "minimize") return Direction::minimize;
  throw std::invalid_argument("direction must be max or min, got '" + s + "'");
}

std::string to_string(PointVerdict v) {
  switch (v) {
    case PointVerdict::feasible: return "feasible";
    case PointVerdict::infeasible: return "infeasible";
    case PointVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

PointVerdict point_verdict(Outcome o) {
  switch (o) {
    case Outcome::certified: return PointVerdict::feasible;
    case Outcome::no_certificate: return PointVerdict::infeasible;
    case Outcome::inconclusive: return PointVerdict::inconclusive;
  }
  return PointVerdict::inconclusive;
}

namespace {

Probe run_probe(const HybridSystem& sys, const SynthesisConfig& config, const std::string& name, double value) {
  Probe p;
  p.value = value;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto inst = reinstantiate(sys, {{name, value}});
    auto res = verify(inst, config);
    p.verdict = point_verdict(res.outcome);
    p.sdp_iterations = res.sdp_iterations;
    if (!res.diagnostics.empty()) p.note = res.diagnostics.front();
  } catch (const std::exception& e) {
    p.verdict = PointVerdict::inconclusive;
    p.note = e.what();
  }
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

nlohmann::json probe_json(const Probe& p) {
  nlohmann::json j;
  j["value"] = p.value;
  j["verdict"] = to_string(p.verdict);
  j["seconds"] = p.seconds;
  j["sdp_iterations"] = p.sdp_iterations;
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

// Position along the search direction: larger is further.
double ahead(Direction d, double v) { return d == Direction::maximize ? v : -v; }

}  // namespace

nlohmann::json BisectResult::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["direction"] = to_string(direction);
  j["bracket"] = {lo, hi};
  j["established"] = established;
  if (established) j["bound"] = bound;
  j["degenerate"] = degenerate;
  j["monotone"] = monotone;
  auto& ps = j["probes"] = nlohmann::json::array();
  for (const auto& p : probes) ps.push_back(probe_json(p));
  j["notes"] = notes;
  return j;
}

BisectResult bisect(const HybridSystem& sys, const SynthesisConfig& config, const BisectOptions& opts) {
  if (!(opts.lo < opts.hi)) throw std::invalid_argument("bisection bracket must satisfy lo < hi");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
  BisectResult res;
  res.name = opts.name;
  res.direction = opts.direction;
  res.lo = opts.lo;
  res.hi = opts.hi;
  const bool maximize = opts.direction == Direction::maximize;
  res.notes.push_back("feasibility is assumed monotone in " + opts.name);

  auto fa = std::async(std::launch::async, run_probe, std::cref(sys), std::cref(config), opts.name, opts.lo);
  auto fb = std::async(std::launch::async, run_probe, std::cref(sys), std::cref(config), opts.name, opts.hi);
  const Probe plo = fa.get();
  const Probe phi = fb.get();
  res.probes = {plo, phi};
  const bool lo_ok = plo.verdict == PointVerdict::feasible;
  const bool hi_ok = phi.verdict == PointVerdict::feasible;

  if (lo_ok && hi_ok) {
    res.degenerate = true;
    res.established = true;
    res.bound = opts.lo;
    res.notes.push_back("both bracket ends are feasible; returning the lower end");
    return res;
  }
  // The end that should be feasible: lo when maximizing, hi when minimizing.
  const Probe& anchor = maximize ? plo : phi;
  const Probe& far = maximize ? phi : plo;
  if (anchor.verdict != PointVerdict::feasible) {
    res.notes.push_back(far.verdict == PointVerdict::feasible
                            ? "only the " + std::string(maximize ? "upper" : "lower") +
                                  " end is feasible; the bracket is reversed for this direction"
                            : "no feasible end in the bracket");
    if (far.verdict == PointVerdict::feasible) res.monotone = false;
    return res;
  }

  double good = anchor.value;
  double bad = far.value;
  res.established = true;
  int count = 2;
  while (std::abs(bad - good) > opts.tol && count < opts.max_probes) {
    const double mid = 0.5 * (good + bad);
    Probe p = run_probe(sys, config, opts.name, mid);
    ++count;
    res.probes.push_back(p);
    if (p.verdict == PointVerdict::feasible) {
      good = mid;
    } else {
      bad = mid;
    }
    // Monotonicity harness over every probe so far.
    for (const auto& f : res.probes) {
      if (f.verdict != PointVerdict::feasible) continue;
      for (const auto& g : res.probes) {
        if (g.verdict == PointVerdict::infeasible && ahead(opts.direction, f.value) > ahead(opts.direction, g.value)) {
          res.monotone = false;
          res.notes.push_back("certificate at " + poly::format_double(f.value) +
                              " lies beyond verified infeasibility at " + poly::format_double(g.value));
        }
      }
    }
    if (!res.monotone) break;
  }
  if (count >= opts.max_probes) res.notes.push_back("probe cap reached before the tolerance");
  res.bound = good;
  res.lo = std::min(good, bad);
  res.hi = std::max(good, bad);
  return res;
}

std::vector<std::map<std::string, double>> sweep_points(const SweepSpec& spec) {
  std::vector<std::map<std::string, double>> out;
  if (spec.monte_carlo > 0) {
    if (spec.ranges.empty()) throw std::invalid_argument("Monte-Carlo sweep needs at least one range");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < spec.monte_carlo; ++k) {
      std::map<std::string, double> pt;
      for (const auto& r : spec.ranges) pt[r.name] = r.lo + (r.hi - r.lo) * u(rng);
      out.push_back(std::move(pt));
    }
    return out;
  }
  if (spec.grid.empty()) throw std::invalid_argument("sweep needs a grid or a Monte-Carlo count");
  for (const auto& a : spec.grid) {
    if (a.values.empty()) throw std::invalid_argument("grid axis " + a.name + " has no values");
  }
  std::vector<std::size_t> idx(spec.grid.size(), 0);
  while (true) {
    std::map<std::string, double> pt;
    for (std::size_t k = 0; k < spec.grid.size(); ++k) pt[spec.grid[k].name] = spec.grid[k].values[idx[k]];
    out.push_back(std::move(pt));
    std::size_t k = spec.grid.size();
    while (k > 0) {
      --k;
      if (++idx[k] < spec.grid[k].values.size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
  }
}

SweepResult sweep(const HybridSystem& sys, const SynthesisConfig& config, const SweepSpec& spec) {
  SweepResult res;
  if (spec.monte_carlo > 0) {
    for (const auto& r : spec.ranges) res.names.push_back(r.name);
  } else {
    for (const auto& a : spec.grid) res.names.push_back(a.name);
  }
  const auto pts = sweep_points(spec);
  res.points.resize(pts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < pts.size(); i = next++) {
      SweepPoint& sp = res.points[i];
      sp.values = pts[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto inst = reinstantiate(sys, pts[i]);
        auto vr = verify(inst, config);
        sp.verdict = point_verdict(vr.outcome);
        sp.sdp_iterations = vr.sdp_iterations;
      } catch (const std::exception& e) {
        sp.verdict = PointVerdict::inconclusive;
        sp.error = e.what();
      }
      sp.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  int workers = spec.workers > 0 ? spec.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, pts.size())));
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, worker));
  for (auto& j : jobs) j.get();
  return res;
}

void SweepResult::write_csv(std::ostream& out, const std::string& manifest) const {
  if (!manifest.empty()) out << "# manifest=" << manifest << "\n";
  for (const auto& n : names) out << n << ",";
  out << "verdict,solve-time-seconds,sdp-iterations\n";
  for (const auto& p : points) {
    for (const auto& n : names) out << poly::format_double(p.values.at(n)) << ",";
    out << to_string(p.verdict) << "," << poly::format_double(p.seconds) << "," << p.sdp_iterations << "\n";
  }
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json j;
  j["names"] = names;
  auto& ps = j["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json e;
    e["values"] = p.values;
    e["verdict"] = to_string(p.verdict);
    e["seconds"] = p.seconds;
    e["sdp_iterations"] = p.sdp_iterations;
    if (!p.error.empty()) e["error"] = p.error;
    ps.push_back(std::move(e));
  }
  return j;
}

}  // namespace zenosos::zeno
