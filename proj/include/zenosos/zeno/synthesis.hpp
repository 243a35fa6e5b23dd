#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenosos/hybrid/system.hpp"
#include "zenosos/sdp/solver.hpp"
#include "zenosos/sos/program.hpp"

namespace zenosos::zeno {

using hybrid::HybridSystem;

struct SynthesisConfig {
  /// Lyapunov degree for every mode (even, >= 2).
  int degree = 6;
  std::map<std::string, int> mode_degree;
  /// Added to the target degree of every constraint before multiplier
  /// degrees are derived.
  int multiplier_degree_slack = 0;
  /// Values tried for the single mode whose r_q is below one, largest first.
  std::vector<double> r_grid = {0.999, 0.99, 0.95, 0.9, 0.75, 0.5, 0.25};
  /// Fixed r_q per mode; overrides the grid when non-empty.
  std::map<std::string, double> fixed_r;
  /// Treat r_q as a decision variable (not affine; the builders throw).
  bool decision_r = false;
  double alpha_floor = 1e-4;
  double gamma_floor = 1e-4;
  /// Retry at degree + 2 up to this cap (0 = no escalation).
  int max_degree = 0;
  sdp::SolverOptions solver;
  int post_samples = 10000;
  double cert_margin = 1e-6;
  /// Box half-width for sampling the neighborhoods and the parameter set.
  double sample_radius = 5.0;
  double parameter_radius = 10.0;
  std::uint64_t seed = 1;

  int degree_of(const std::string& mode) const;
  nlohmann::json to_json() const;
};

/// One SOS constraint of the feasibility program.
struct ConstraintRecord {
  std::string label;
  std::string kind;  // positivity, decrease, reset
  std::string mode;
  int edge = -1;
  int piece = 0;
  int target_degree = 0;
  std::vector<std::string> multipliers;
};

struct FeasibilityProgram {
  sos::SosProgram program{poly::VariableList{}};
  bool parametric = false;
  std::map<std::string, sos::PolyVariable> lyapunov;
  sos::ScalarVariable alpha;
  sos::ScalarVariable gamma;
  std::map<std::string, double> r;
  std::vector<ConstraintRecord> constraints;
  std::vector<std::string> notes;
};

/// Nominal program; the system must have no free parameters.
FeasibilityProgram build_fp1(const HybridSystem& sys, const SynthesisConfig& config,
                             const std::map<std::string, double>& r);
/// Parametric program over (x, p); identical to build_fp1 when the system has
/// no parameters.
FeasibilityProgram build_fp2(const HybridSystem& sys, const SynthesisConfig& config,
                             const std::map<std::string, double>& r);

struct SamplingReport {
  int samples = 0;
  int guard_samples = 0;
  int violations = 0;
  double worst_positivity = 0.0;  // min of V - alpha |x - z|^2
  double worst_decrease = 0.0;    // max of grad V . f + gamma
  double worst_reset = 0.0;       // min of r V_q - V_q' o phi
  double worst_zero = 0.0;        // max |V_q(z_q, p)|
  std::vector<std::string> notes;
  bool passed = false;

  nlohmann::json to_json() const;
};

struct ZenoCertificate {
  std::string system;
  int degree = 0;
  bool parametric = false;
  poly::VariableList variables;
  std::map<std::string, poly::Polynomial> lyapunov;
  /// Every multiplier and Lyapunov polynomial by program name.
  std::map<std::string, poly::Polynomial> polynomials;
  double alpha = 0.0;
  double gamma = 0.0;
  std::map<std::string, double> r;
  SamplingReport sampling;
  double max_identity_residual = 0.0;
  sdp::Residuals sdp_residuals;
  int sdp_iterations = 0;
  nlohmann::json program_json;

  nlohmann::json to_json() const;
};

enum class Outcome { certified, no_certificate, inconclusive };
std::string to_string(Outcome o);

struct Attempt {
  int degree = 0;
  std::map<std::string, double> r;
  sos::Verdict verdict = sos::Verdict::inconclusive;
  std::string sdp_status;
  int iterations = 0;
  int rows = 0;
  double seconds = 0.0;
  std::string note;
};

struct VerifyResult {
  Outcome outcome = Outcome::inconclusive;
  std::optional<ZenoCertificate> certificate;
  std::vector<Attempt> attempts;
  std::vector<std::string> diagnostics;
  double seconds = 0.0;
  int sdp_iterations = 0;

  nlohmann::json to_json() const;
};

/// Searches the r grid (and optionally higher degrees); a certificate is
/// returned only after it passes post-verification.
VerifyResult verify(const HybridSystem& sys, const SynthesisConfig& config);

/// Independent sampling check of the Lyapunov conditions.
SamplingReport post_verify(const HybridSystem& sys, const ZenoCertificate& cert, int samples,
                           const SynthesisConfig& config);

}  // namespace zenosos::zeno
