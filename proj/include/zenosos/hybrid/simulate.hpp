#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zenosos/hybrid/system.hpp"

namespace zenosos::hybrid {

enum class SimVerdict { zeno_detected, diverged, left_neighborhood, horizon_reached, blocked };
std::string to_string(SimVerdict v);

struct SimOptions {
  double horizon = 50.0;
  double event_tol = 1e-10;
  double membership_tol = kMembershipTol;
  double zeno_gap_tol = 1e-6;
  int zeno_count = 8;
  int max_transitions = 100000;
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  /// Upper bound on the integrator step (0 = horizon).
  double max_step = 0.05;
  double divergence_norm = 1e6;
  bool stop_on_neighborhood_exit = true;
  /// Spacing of recorded samples inside each interval (0 = integrator steps only).
  double sample_dt = 0.0;
};

struct TrajectorySample {
  double t;
  std::vector<double> x;
};

struct Interval {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::string mode;
  std::vector<TrajectorySample> samples;
};

struct Transition {
  double time;
  int edge;
  std::vector<double> pre;
  std::vector<double> post;
};

struct Execution {
  std::vector<Interval> intervals;
  std::vector<Transition> transitions;
  SimVerdict verdict = SimVerdict::horizon_reached;
  std::optional<double> zeno_time_estimate;
  std::vector<std::string> warnings;

  std::vector<double> transition_times() const;
};

/// Event-detecting simulation. `params` must fix every declared parameter.
Execution simulate(const HybridSystem& sys, const std::string& initial_mode,
                   const std::vector<double>& initial_state,
                   const std::map<std::string, double>& params = {}, const SimOptions& opts = {});

/// Accumulation time from the geometric ratio fitted to the last
/// `count` gaps; none unless the verdict is zeno_detected.
std::optional<double> zeno_time(const Execution& ex, int count = 8);

}  // namespace zenosos::hybrid
