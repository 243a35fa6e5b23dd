#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zenosos/sdp/problem.hpp"

namespace zenosos::sdp {

enum class Status { optimal, infeasible_certificate, numerical_failure, iteration_limit };

std::string to_string(Status s);

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double eig_tol = 1e-9;
  /// Tolerance on the improving-ray inequalities after normalizing b'y = 1.
  double ray_tol = 1e-7;
  int max_iterations = 200;
  /// Trace penalty applied when the objective is empty.
  double feasibility_trace_weight = 1e-9;
  bool verbose = false;
};

struct Residuals {
  /// ||b - A(X) - Af xf||
  double primal = 0.0;
  /// ||C - S - A'(y)||_F combined with ||cf - Af' y||
  double dual = 0.0;
  /// <X, S>
  double gap = 0.0;
  double primal_relative = 0.0;
  double dual_relative = 0.0;
  double gap_relative = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
};

struct SdpSolution {
  Status status = Status::iteration_limit;
  std::vector<Eigen::MatrixXd> X;
  Eigen::VectorXd xf;
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> S;
  /// Residuals of the returned iterate against the caller's problem data
  /// (with the trace penalty when the objective was empty).
  Residuals residuals;
  int iterations = 0;
  /// Normalized dual ray (b'y = 1) when status is infeasible_certificate.
  Eigen::VectorXd ray;
  std::string message;
};

SdpSolution solve(const SdpProblem& prob, const SolverOptions& opts = {});

/// Recomputes residuals directly from problem data. The objective used is the
/// problem's own objective, or the trace penalty when it is empty and
/// `trace_weight` > 0.
Residuals residuals(const SdpProblem& prob, const SdpSolution& sol,
                    double trace_weight = 0.0);

struct RayCheck {
  bool valid = false;
  double bty = 0.0;
  /// Largest eigenvalue of sum y_i A_i over all blocks, after scaling y so
  /// that b'y = 1.
  double max_eigenvalue = 0.0;
  double free_residual = 0.0;
};

/// Verifies that y certifies primal infeasibility: b'y > 0 and, scaled to
/// b'y = 1, sum y_i A_i is negative semidefinite to within tol and Af' y = 0
/// to within tol.
RayCheck verify_ray(const SdpProblem& prob, const Eigen::VectorXd& y, double tol);

/// Dense symmetric matrix of sum_i w_i A_i restricted to one block.
Eigen::MatrixXd adjoint_block(const SdpProblem& prob, const Eigen::VectorXd& w, int block);

}  // namespace zenosos::sdp
