#include "zenosos/hybrid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>

namespace zenosos::hybrid {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;
using Stepper = odeint::runge_kutta_dopri5<State>;
using DenseStepper = odeint::result_of::make_dense_output<Stepper>::type;

constexpr int kSubsamples = 16;

struct Crossing {
  double time;
  State pre;
};

class Run {
 public:
  Run(const HybridSystem& sys, const SimOptions& opts) : sys_(sys), opts_(opts) {}

  Execution operator()(const std::string& initial_mode, const State& x0) {
    int q = sys_.mode_index(initial_mode);
    double t = 0.0;
    State x = x0;
    const double max_dt = opts_.max_step > 0 ? opts_.max_step : opts_.horizon;
    double dt = std::min(1e-3, max_dt);
    while (true) {
      const Mode& mode = sys_.modes[q];
      Interval iv{t, t, mode.id, {{t, x}}};
      const auto out = sys_.out_edges(mode.id);
      // Detection function per edge: sigma * h0, positive on the interior side.
      std::vector<int> sigma(out.size());
      std::vector<double> prev(out.size());
      std::vector<bool> seen_positive(out.size(), false);
      std::vector<bool> on_guard(out.size(), false);
      for (std::size_t k = 0; k < out.size(); ++k) {
        const Edge& e = sys_.edges[out[k]];
        const double h = poly::evaluate(e.guard_equality, x);
        sigma[k] = e.interior_sign != 0 ? e.interior_sign : (h < 0 ? -1 : 1);
        prev[k] = sigma[k] * h;
        seen_positive[k] = prev[k] > opts_.event_tol;
        on_guard[k] = std::abs(prev[k]) <= opts_.event_tol;
      }
      auto rhs = [&mode](const State& s, State& ds, double) {
        for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = poly::evaluate(mode.field[i], s);
      };
      DenseStepper stepper = odeint::make_dense_output(opts_.abs_tol, opts_.rel_tol, max_dt, Stepper());
      stepper.initialize(x, t, dt);
      const double t_start = t;
      std::optional<std::pair<int, Crossing>> fired;
      bool stop = false;
      double next_sample = opts_.sample_dt > 0 ? t + opts_.sample_dt : 0.0;
      State xs(x.size());
      while (!fired && !stop) {
        if (t >= opts_.horizon) {
          ex_.verdict = SimVerdict::horizon_reached;
          stop = true;
          break;
        }
        std::pair<double, double> span;
        try {
          span = stepper.do_step(rhs);
        } catch (const std::exception& err) {
          ex_.warnings.push_back(std::string("integration failure: ") + err.what());
          ex_.verdict = SimVerdict::diverged;
          stop = true;
          break;
        }
        dt = stepper.current_time_step();
        const double ta = span.first;
        const double tb = std::min(span.second, opts_.horizon);
        double s_prev = ta;
        for (int j = 1; j <= kSubsamples && !fired && !stop; ++j) {
          const double s = ta + (tb - ta) * j / kSubsamples;
          stepper.calc_state(s, xs);
          if (!finite(xs)) {
            ex_.verdict = SimVerdict::diverged;
            stop = true;
            break;
          }
          std::optional<std::pair<int, Crossing>> best;
          for (std::size_t k = 0; k < out.size(); ++k) {
            const Edge& e = sys_.edges[out[k]];
            const double cur = sigma[k] * poly::evaluate(e.guard_equality, xs);
            std::optional<Crossing> c;
            if (prev[k] > 0 && cur <= 0) {
              c = locate(stepper, e, sigma[k], s_prev, s);
            } else if (on_guard[k] && cur < 0 && !seen_positive[k] && s_prev == t_start) {
              c = departure(stepper, e, sigma[k], t_start, s);
            }
            if (cur > opts_.event_tol) seen_positive[k] = true;
            prev[k] = cur;
            if (!c || !accept(e, c->pre)) continue;
            if (!best || c->time < best->second.time - 1e-12) {
              if (best) ambiguous_warning();
              best = std::make_pair(out[k], *c);
            } else if (std::abs(c->time - best->second.time) <= 1e-12) {
              ambiguous_warning();
            }
          }
          if (best) {
            fired = best;
            break;
          }
          if (opts_.sample_dt > 0) {
            State xg(x.size());
            while (next_sample <= s) {
              stepper.calc_state(next_sample, xg);
              iv.samples.push_back({next_sample, xg});
              next_sample += opts_.sample_dt;
            }
          }
          double norm = 0.0;
          for (double v : xs) norm = std::max(norm, std::abs(v));
          if (norm > opts_.divergence_norm) {
            ex_.verdict = SimVerdict::diverged;
            stop = true;
          } else if (mode.domain_margin(xs) < -opts_.membership_tol) {
            ex_.verdict = SimVerdict::blocked;
            ex_.warnings.push_back("left the domain of mode " + mode.id + " away from every guard at t = " +
                                   std::to_string(s));
            stop = true;
          } else if (opts_.stop_on_neighborhood_exit && mode.neighborhood.margin(xs) < -opts_.membership_tol) {
            ex_.verdict = SimVerdict::left_neighborhood;
            stop = true;
          }
          if (stop) {
            iv.samples.push_back({s, xs});
            t = s;
          }
          s_prev = s;
        }
        if (!fired && !stop) {
          t = tb;
          stepper.calc_state(tb, xs);
          if (opts_.sample_dt <= 0) iv.samples.push_back({tb, xs});
          x = xs;
        }
      }
      if (!fired) {
        iv.t_end = t;
        ex_.intervals.push_back(std::move(iv));
        return finish();
      }
      const Edge& e = sys_.edges[fired->first];
      Transition tr{fired->second.time, fired->first, fired->second.pre, {}};
      tr.post.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) tr.post[i] = poly::evaluate(e.reset[i], tr.pre);
      iv.t_end = tr.time;
      if (iv.samples.back().t < tr.time) iv.samples.push_back({tr.time, tr.pre});
      ex_.intervals.push_back(std::move(iv));
      ex_.transitions.push_back(tr);
      t = tr.time;
      x = tr.post;
      q = sys_.mode_index(e.target);
      if (zeno_check()) {
        ex_.intervals.push_back({t, t, sys_.modes[q].id, {{t, x}}});
        return finish();
      }
      if (static_cast<int>(ex_.transitions.size()) >= opts_.max_transitions) {
        ex_.warnings.push_back("transition cap reached");
        ex_.intervals.push_back({t, t, sys_.modes[q].id, {{t, x}}});
        ex_.verdict = SimVerdict::horizon_reached;
        return finish();
      }
    }
  }

 private:
  static bool finite(const State& s) {
    return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
  }

  void ambiguous_warning() {
    if (!ambiguous_reported_) ex_.warnings.push_back("ambiguous simultaneous guard crossing; first edge taken");
    ambiguous_reported_ = true;
  }

  bool accept(const Edge& e, const State& pre) const {
    if (!e.guard_holds(pre, opts_.membership_tol)) return false;
    State post(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) post[i] = poly::evaluate(e.reset[i], pre);
    return sys_.mode(e.target).in_domain(post, opts_.membership_tol);
  }

  /// Bisection between lo (detection value > 0) and hi (<= 0).
  Crossing locate(DenseStepper& st, const Edge& e, int sigma, double lo, double hi) const {
    State x(sys_.dimension());
    auto phi = [&](double t) {
      st.calc_state(t, x);
      return sigma * poly::evaluate(e.guard_equality, x);
    };
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      if (phi(mid) > 0) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (std::abs(phi(hi)) <= 1e-3 * opts_.event_tol) break;
    }
    const double flo = std::abs(phi(lo));
    const double fhi = std::abs(phi(hi));
    const double t = fhi <= flo ? hi : lo;
    st.calc_state(t, x);
    return {t, x};
  }

  /// Trajectory starting on the guard whose first sample lies outside: look
  /// for a short excursion into the interior, else the crossing is immediate.
  Crossing departure(DenseStepper& st, const Edge& e, int sigma, double t0, double t1) const {
    State x(sys_.dimension());
    for (int k = 1; k <= 80; ++k) {
      const double t = t0 + (t1 - t0) * std::ldexp(1.0, -k);
      if (t <= t0) break;
      st.calc_state(t, x);
      if (sigma * poly::evaluate(e.guard_equality, x) > 0) return locate(st, e, sigma, t, t1);
    }
    st.calc_state(t0, x);
    return {t0, x};
  }

  bool zeno_check() {
    const int n = opts_.zeno_count;
    const auto& tr = ex_.transitions;
    if (static_cast<int>(tr.size()) < n + 1) return false;
    for (std::size_t i = tr.size() - n; i < tr.size(); ++i) {
      if (tr[i].time - tr[i - 1].time >= opts_.zeno_gap_tol) return false;
    }
    auto est = zeno_time_from(tr, n);
    if (!est) return false;
    ex_.verdict = SimVerdict::zeno_detected;
    ex_.zeno_time_estimate = est;
    return true;
  }

  Execution finish() { return std::move(ex_); }

 public:
  static std::optional<double> zeno_time_from(const std::vector<Transition>& tr, int n) {
    if (n < 2 || static_cast<int>(tr.size()) < n + 1) return std::nullopt;
    std::vector<double> gaps;
    for (std::size_t i = tr.size() - n; i < tr.size(); ++i) gaps.push_back(tr[i].time - tr[i - 1].time);
    const double last = tr.back().time;
    if (std::any_of(gaps.begin(), gaps.end(), [](double g) { return g <= 0; })) return last;
    // Least-squares slope of log(gap) against index.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      const double y = std::log(gaps[i]);
      sx += i;
      sy += y;
      sxx += double(i) * i;
      sxy += i * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double rho = std::exp(slope);
    if (!(rho < 1.0)) return std::nullopt;
    return last + gaps.back() * rho / (1.0 - rho);
  }

 private:
  const HybridSystem& sys_;
  const SimOptions& opts_;
  Execution ex_;
  bool ambiguous_reported_ = false;
};

}  // namespace

std::string to_string(SimVerdict v) {
  switch (v) {
    case SimVerdict::zeno_detected: return "zeno-detected";
    case SimVerdict::diverged: return "diverged";
    case SimVerdict::left_neighborhood: return "left-neighborhood";
    case SimVerdict::horizon_reached: return "horizon-reached";
    case SimVerdict::blocked: return "blocked";
  }
  return "unknown";
}

std::vector<double> Execution::transition_times() const {
  std::vector<double> out;
  for (const auto& t : transitions) out.push_back(t.time);
  return out;
}

Execution simulate(const HybridSystem& sys, const std::string& initial_mode, const std::vector<double>& initial_state,
                   const std::map<std::string, double>& params, const SimOptions& opts) {
  HybridSystem concrete = sys.parameterized() ? sys.with_parameters(params, false) : sys;
  bool outside_set = false;
  if (sys.parameterized() && concrete.parameters.empty()) {
    std::vector<double> pt(sys.dimension(), 0.0);
    for (const auto& name : sys.parameters) pt.push_back(params.count(name) ? params.at(name) : 0.0);
    outside_set = !sys.parameter_set.contains(pt);
  }
  if (!params.empty() && !sys.parameterized()) throw SystemError("system has no parameters");
  if (concrete.parameterized()) throw SystemError("every parameter needs a value for simulation");
  const int q = concrete.mode_index(initial_mode);
  if (q < 0) throw SystemError("unknown initial mode '" + initial_mode + "'");
  if (initial_state.size() != concrete.dimension()) throw SystemError("initial state has wrong dimension");
  if (!concrete.modes[q].in_domain(initial_state, opts.membership_tol)) {
    throw SystemError("initial state lies outside the domain of mode " + initial_mode);
  }
  auto ex = Run(concrete, opts)(initial_mode, initial_state);
  if (outside_set) ex.warnings.insert(ex.warnings.begin(), "parameter values lie outside the parameter set");
  return ex;
}

std::optional<double> zeno_time(const Execution& ex, int count) {
  if (ex.verdict != SimVerdict::zeno_detected) return std::nullopt;
  return Run::zeno_time_from(ex.transitions, count);
}

}  // namespace zenosos::hybrid
