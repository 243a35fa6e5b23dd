#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenosos/zeno/synthesis.hpp"

namespace zenosos::zeno {

enum class Direction { maximize, minimize };
std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

/// Sweep and bisection verdicts.
enum class PointVerdict { feasible, infeasible, inconclusive };
std::string to_string(PointVerdict v);
PointVerdict point_verdict(Outcome o);

struct Probe {
  double value = 0.0;
  PointVerdict verdict = PointVerdict::inconclusive;
  double seconds = 0.0;
  int sdp_iterations = 0;
  std::string note;
};

struct BisectOptions {
  /// Constant or parameter of the system file that is bisected.
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  Direction direction = Direction::maximize;
  double tol = 1e-2;
  int max_probes = 64;
};

struct BisectResult {
  std::string name;
  Direction direction = Direction::maximize;
  double lo = 0.0;
  double hi = 0.0;
  /// Best value with a certificate; meaningful only when `established`.
  double bound = 0.0;
  bool established = false;
  bool degenerate = false;
  bool monotone = true;
  /// In evaluation order.
  std::vector<Probe> probes;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

/// Bisection on one named value. Inconclusive probes count as infeasible;
/// a certificate strictly beyond a verified infeasibility in the search
/// direction stops the search with `monotone` false.
BisectResult bisect(const HybridSystem& sys, const SynthesisConfig& config, const BisectOptions& opts);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

struct SweepSpec {
  /// Cartesian grid, first axis slowest.
  std::vector<SweepAxis> grid;
  /// Uniform draws over `ranges` when `monte_carlo` > 0.
  int monte_carlo = 0;
  std::vector<SweepRange> ranges;
  std::uint64_t seed = 1;
  /// Worker count; 0 uses the hardware concurrency.
  int workers = 0;
};

struct SweepPoint {
  std::map<std::string, double> values;
  PointVerdict verdict = PointVerdict::inconclusive;
  double seconds = 0.0;
  int sdp_iterations = 0;
  std::string error;
};

struct SweepResult {
  std::vector<std::string> names;
  std::vector<SweepPoint> points;

  /// Columns: names..., verdict, solve-time-seconds, sdp-iterations. A
  /// leading comment line carries `manifest` when non-empty.
  void write_csv(std::ostream& out, const std::string& manifest = {}) const;
  nlohmann::json to_json() const;
};

/// Expands a spec into concrete points in output order.
std::vector<std::map<std::string, double>> sweep_points(const SweepSpec& spec);

SweepResult sweep(const HybridSystem& sys, const SynthesisConfig& config, const SweepSpec& spec);

}  // namespace zenosos::zeno
