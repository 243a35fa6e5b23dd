#include "zenosos/sdp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace zenosos::sdp {

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible_certificate: return "infeasible-certificate";
    case Status::numerical_failure: return "numerical-failure";
    case Status::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Blocks = std::vector<MatrixXd>;

struct Entry {
  int r;
  int c;
  double v;
};

struct BlockRow {
  int con;
  std::vector<Entry> entries;
};

double dot(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double frob(const Blocks& a) {
  double s = 0.0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Entry contribution to <A, G> for a symmetric A stored upper-triangular.
inline double entry_dot(const Entry& e, const MatrixXd& g) {
  return e.r == e.c ? e.v * g(e.r, e.c) : e.v * (g(e.r, e.c) + g(e.c, e.r));
}

inline void entry_add(const Entry& e, double w, MatrixXd& out) {
  out(e.r, e.c) += w * e.v;
  if (e.r != e.c) out(e.c, e.r) += w * e.v;
}

// Largest step t <= inf with m + t*d PSD, given a Cholesky factor of m.
double max_step(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& d) {
  MatrixXd t = chol.matrixL().solve(d);
  t = chol.matrixL().solve(t.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(t), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

// Problem data after dropping empty rows and row equilibration.
struct Scaled {
  int m = 0;
  int nf = 0;
  std::vector<int> n;
  std::vector<std::vector<BlockRow>> rows;  // per block
  MatrixXd Af;                              // m x nf
  VectorXd b;
  VectorXd cf;
  Blocks C;
  VectorXd d;                    // row scale factors
  std::vector<int> original;     // scaled row -> original row

  VectorXd apply(const Blocks& g) const {
    VectorXd out = VectorXd::Zero(m);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (const auto& row : rows[k]) {
        double s = 0.0;
        for (const auto& e : row.entries) s += entry_dot(e, g[k]);
        out(row.con) += s;
      }
    }
    return out;
  }

  Blocks adjoint(const VectorXd& y) const {
    Blocks out(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) {
      out[k] = MatrixXd::Zero(n[k], n[k]);
      for (const auto& row : rows[k]) {
        const double w = y(row.con);
        if (w == 0.0) continue;
        for (const auto& e : row.entries) entry_add(e, w, out[k]);
      }
    }
    return out;
  }

  // M_ij = sum_k tr(A_i X A_j W) over blocks.
  MatrixXd schur(const Blocks& X, const Blocks& W) const {
    MatrixXd M = MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const int nk = n[k];
      const auto& rk = rows[k];
      std::vector<int> cols;
      std::vector<int> pos(nk, -1);
      for (std::size_t a = 0; a < rk.size(); ++a) {
        cols.clear();
        for (const auto& e : rk[a].entries) {
          for (int c : {e.r, e.c}) {
            if (pos[c] < 0) {
              pos[c] = static_cast<int>(cols.size());
              cols.push_back(c);
            }
          }
        }
        // P = X A_a restricted to the touched columns.
        MatrixXd P = MatrixXd::Zero(nk, static_cast<int>(cols.size()));
        for (const auto& e : rk[a].entries) {
          P.col(pos[e.c]) += e.v * X[k].col(e.r);
          if (e.r != e.c) P.col(pos[e.r]) += e.v * X[k].col(e.c);
        }
        MatrixXd Wj(static_cast<int>(cols.size()), nk);
        for (std::size_t t = 0; t < cols.size(); ++t) Wj.row(static_cast<int>(t)) = W[k].row(cols[t]);
        for (int c : cols) pos[c] = -1;
        MatrixXd F = P * Wj;
        const int i = rk[a].con;
        for (std::size_t b2 = a; b2 < rk.size(); ++b2) {
          double s = 0.0;
          for (const auto& e : rk[b2].entries) s += entry_dot(e, F);
          const int j = rk[b2].con;
          M(i, j) += s;
          if (j != i) M(j, i) += s;
        }
      }
    }
    return M;
  }
};

struct Prepared {
  Scaled s;
  std::vector<int> trivially_infeasible;  // original rows with A = 0, b != 0
  bool trace_penalty = false;
};

Prepared prepare(const SdpProblem& prob, const SolverOptions& opts) {
  Prepared out;
  Scaled& s = out.s;
  s.n = prob.block_sizes;
  s.nf = prob.free_count;
  const int m0 = static_cast<int>(prob.constraints.size());
  std::vector<double> norms(m0, 0.0);
  for (int i = 0; i < m0; ++i) {
    const auto& c = prob.constraints[i];
    double nrm = 0.0;
    for (const auto& e : c.entries) nrm += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    for (const auto& f : c.free) nrm += f.value * f.value;
    norms[i] = std::sqrt(nrm);
    if (norms[i] == 0.0) {
      if (c.rhs != 0.0) out.trivially_infeasible.push_back(i);
      continue;
    }
    s.original.push_back(i);
  }
  s.m = static_cast<int>(s.original.size());
  s.rows.assign(s.n.size(), {});
  s.Af = MatrixXd::Zero(s.m, s.nf);
  s.b = VectorXd::Zero(s.m);
  s.d = VectorXd::Zero(s.m);
  for (int i = 0; i < s.m; ++i) {
    const auto& c = prob.constraints[s.original[i]];
    const double d = 1.0 / norms[s.original[i]];
    s.d(i) = d;
    s.b(i) = d * c.rhs;
    for (const auto& e : c.entries) {
      if (e.value == 0.0) continue;
      auto& rb = s.rows[e.block];
      if (rb.empty() || rb.back().con != i) rb.push_back({i, {}});
      rb.back().entries.push_back({e.row, e.col, d * e.value});
    }
    for (const auto& f : c.free) s.Af(i, f.index) += d * f.value;
  }
  // Entries of one constraint in one block might be interleaved with other
  // blocks in the input; merge duplicate BlockRow records.
  for (auto& rb : s.rows) {
    std::stable_sort(rb.begin(), rb.end(),
                     [](const BlockRow& a, const BlockRow& b) { return a.con < b.con; });
    std::vector<BlockRow> merged;
    for (auto& r : rb) {
      if (!merged.empty() && merged.back().con == r.con) {
        merged.back().entries.insert(merged.back().entries.end(), r.entries.begin(),
                                     r.entries.end());
      } else {
        merged.push_back(std::move(r));
      }
    }
    rb = std::move(merged);
  }
  s.C.resize(s.n.size());
  for (std::size_t k = 0; k < s.n.size(); ++k) s.C[k] = MatrixXd::Zero(s.n[k], s.n[k]);
  s.cf = VectorXd::Zero(s.nf);
  if (prob.objective.empty()) {
    out.trace_penalty = true;
    for (auto& c : s.C) c.diagonal().setConstant(opts.feasibility_trace_weight);
  } else {
    for (const auto& e : prob.objective.entries) entry_add({e.row, e.col, e.value}, 1.0, s.C[e.block]);
    for (const auto& f : prob.objective.free) s.cf(f.index) += f.value;
  }
  return out;
}

// Equilibrated LU of [M Af; Af' -delta I] used as a preconditioner for the
// unregularized system.
struct KktFactor {
  Eigen::PartialPivLU<MatrixXd> lu;
  VectorXd D;
  bool ok = false;
};

KktFactor factor(const MatrixXd& M, const MatrixXd& Af) {
  KktFactor f;
  const int m = static_cast<int>(M.rows());
  const int nf = static_cast<int>(Af.cols());
  MatrixXd K = MatrixXd::Zero(m + nf, m + nf);
  K.topLeftCorner(m, m) = M;
  if (nf > 0) {
    K.topRightCorner(m, nf) = Af;
    K.bottomLeftCorner(nf, m) = Af.transpose();
  }
  f.D = VectorXd::Ones(m + nf);
  for (int pass = 0; pass < 10; ++pass) {
    VectorXd r = K.cwiseAbs().rowwise().maxCoeff();
    bool done = true;
    for (int i = 0; i < m + nf; ++i) {
      const double t = r(i) > 0 ? 1.0 / std::sqrt(r(i)) : 1.0;
      if (std::abs(t - 1.0) > 1e-2) done = false;
      r(i) = t;
    }
    K = r.asDiagonal() * K * r.asDiagonal();
    f.D = f.D.cwiseProduct(r);
    if (done) break;
  }
  const double delta = 1e-13;
  K.topLeftCorner(m, m).diagonal().array() += delta;
  if (nf > 0) K.bottomRightCorner(nf, nf).diagonal().array() -= delta;
  if (!K.allFinite()) return f;
  f.lu.compute(K);
  f.ok = true;
  return f;
}

// Solves [M Af; Af' 0][dy; dxf] = [h; rf] by refinement on the exact system.
void solve_kkt(const KktFactor& f, const MatrixXd& M, const MatrixXd& Af, const VectorXd& h,
               const VectorXd& rf, VectorXd& dy, VectorXd& dxf) {
  const int m = static_cast<int>(M.rows());
  const int nf = static_cast<int>(Af.cols());
  VectorXd rhs(m + nf);
  rhs << h, rf;
  auto apply = [&](const VectorXd& v) {
    VectorXd out(m + nf);
    out.head(m) = M * v.head(m);
    if (nf > 0) {
      out.head(m) += Af * v.tail(nf);
      out.tail(nf) = Af.transpose() * v.head(m);
    }
    return out;
  };
  auto precond = [&](const VectorXd& r) -> VectorXd {
    return f.D.cwiseProduct(f.lu.solve(f.D.cwiseProduct(r)));
  };
  VectorXd x = precond(rhs);
  double best = (rhs - apply(x)).norm();
  for (int it = 0; it < 20 && best > 0.0; ++it) {
    VectorXd xn = x + precond(rhs - apply(x));
    const double e = (rhs - apply(xn)).norm();
    if (!(e < 0.5 * best)) {
      if (e < best) {
        x = xn;
        best = e;
      }
      break;
    }
    x = xn;
    best = e;
  }
  dy = x.head(m);
  dxf = x.tail(nf);
}

double max_eig(const MatrixXd& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

double min_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

MatrixXd adjoint_block(const SdpProblem& prob, const VectorXd& w, int block) {
  const int n = prob.block_sizes.at(block);
  MatrixXd out = MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    if (w(i) == 0.0) continue;
    for (const auto& e : prob.constraints[i].entries) {
      if (e.block != block) continue;
      out(e.row, e.col) += w(i) * e.value;
      if (e.row != e.col) out(e.col, e.row) += w(i) * e.value;
    }
  }
  return out;
}

RayCheck verify_ray(const SdpProblem& prob, const VectorXd& y, double tol) {
  RayCheck rc;
  if (y.size() != static_cast<Eigen::Index>(prob.constraints.size())) {
    throw std::invalid_argument("ray dimension mismatch");
  }
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    rc.bty += prob.constraints[i].rhs * y(i);
  }
  if (!(rc.bty > 0.0)) return rc;
  VectorXd yn = y / rc.bty;
  rc.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < prob.block_sizes.size(); ++k) {
    rc.max_eigenvalue = std::max(rc.max_eigenvalue, max_eig(adjoint_block(prob, yn, static_cast<int>(k))));
  }
  if (prob.block_sizes.empty()) rc.max_eigenvalue = 0.0;
  VectorXd fr = VectorXd::Zero(prob.free_count);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    for (const auto& f : prob.constraints[i].free) fr(f.index) += yn(i) * f.value;
  }
  rc.free_residual = fr.size() ? fr.norm() : 0.0;
  rc.valid = rc.max_eigenvalue <= tol && rc.free_residual <= tol;
  return rc;
}

Residuals residuals(const SdpProblem& prob, const SdpSolution& sol, double trace_weight) {
  const std::size_t nb = prob.block_sizes.size();
  if (sol.X.size() != nb || sol.S.size() != nb ||
      sol.y.size() != static_cast<Eigen::Index>(prob.constraints.size()) ||
      sol.xf.size() != prob.free_count) {
    throw std::invalid_argument("residuals: solution does not conform to problem");
  }
  for (std::size_t k = 0; k < nb; ++k) {
    if (sol.X[k].rows() != prob.block_sizes[k] || sol.S[k].rows() != prob.block_sizes[k]) {
      throw std::invalid_argument("residuals: block size mismatch");
    }
  }
  Residuals r;
  double bnorm = 0.0;
  double pr = 0.0;
  VectorXd fr = VectorXd::Zero(prob.free_count);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& c = prob.constraints[i];
    double ax = 0.0;
    for (const auto& e : c.entries) {
      const auto& X = sol.X[e.block];
      ax += e.row == e.col ? e.value * X(e.row, e.col)
                           : e.value * (X(e.row, e.col) + X(e.col, e.row));
    }
    for (const auto& f : c.free) {
      ax += f.value * sol.xf(f.index);
      fr(f.index) += f.value * sol.y(i);
    }
    pr += (c.rhs - ax) * (c.rhs - ax);
    bnorm += c.rhs * c.rhs;
    r.dual_objective += c.rhs * sol.y(i);
  }
  r.primal = std::sqrt(pr);
  bnorm = std::sqrt(bnorm);

  Blocks C(nb);
  VectorXd cf = VectorXd::Zero(prob.free_count);
  for (std::size_t k = 0; k < nb; ++k) C[k] = MatrixXd::Zero(prob.block_sizes[k], prob.block_sizes[k]);
  if (prob.objective.empty()) {
    for (auto& c : C) c.diagonal().setConstant(trace_weight);
  } else {
    for (const auto& e : prob.objective.entries) {
      C[e.block](e.row, e.col) += e.value;
      if (e.row != e.col) C[e.block](e.col, e.row) += e.value;
    }
    for (const auto& f : prob.objective.free) cf(f.index) += f.value;
  }
  double dr = 0.0;
  double cnorm = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    MatrixXd R = C[k] - sol.S[k] - adjoint_block(prob, sol.y, static_cast<int>(k));
    dr += R.squaredNorm();
    cnorm += C[k].squaredNorm();
    r.primal_objective += C[k].cwiseProduct(sol.X[k]).sum();
    r.gap += sol.X[k].cwiseProduct(sol.S[k]).sum();
  }
  dr += (cf - fr).squaredNorm();
  cnorm += cf.squaredNorm();
  r.primal_objective += cf.dot(sol.xf);
  r.dual = std::sqrt(dr);
  cnorm = std::sqrt(cnorm);
  r.primal_relative = r.primal / (1.0 + bnorm);
  r.dual_relative = r.dual / (1.0 + cnorm);
  r.gap_relative = std::abs(r.gap) / (1.0 + std::abs(r.primal_objective) + std::abs(r.dual_objective));
  return r;
}

SdpSolution solve(const SdpProblem& prob, const SolverOptions& opts) {
  prob.check();
  SdpSolution sol;
  const std::size_t nb = prob.block_sizes.size();
  const int m0 = static_cast<int>(prob.constraints.size());
  auto init_output = [&]() {
    sol.X.assign(nb, {});
    sol.S.assign(nb, {});
    for (std::size_t k = 0; k < nb; ++k) {
      sol.X[k] = MatrixXd::Zero(prob.block_sizes[k], prob.block_sizes[k]);
      sol.S[k] = MatrixXd::Zero(prob.block_sizes[k], prob.block_sizes[k]);
    }
    sol.xf = VectorXd::Zero(prob.free_count);
    sol.y = VectorXd::Zero(m0);
  };

  Prepared prep = prepare(prob, opts);
  const double trace_weight = prep.trace_penalty ? opts.feasibility_trace_weight : 0.0;
  if (!prep.trivially_infeasible.empty()) {
    init_output();
    const int i = prep.trivially_infeasible.front();
    VectorXd ray = VectorXd::Zero(m0);
    ray(i) = 1.0 / prob.constraints[i].rhs;
    sol.ray = ray;
    sol.y = ray;
    sol.status = Status::infeasible_certificate;
    sol.message = "constraint " + std::to_string(i) + " has no variables and nonzero rhs";
    sol.residuals = residuals(prob, sol, trace_weight);
    return sol;
  }
  const Scaled& s = prep.s;
  const int m = s.m;
  const int nf = s.nf;
  const double ntot = std::max<double>(1.0, static_cast<double>(prob.total_dimension()));

  // Initial point.
  Blocks X(nb);
  Blocks S(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const int nk = s.n[k];
    const double sq = std::sqrt(static_cast<double>(nk));
    double worst = 0.0;
    double normA = 0.0;
    for (const auto& row : s.rows[k]) {
      double nr = 0.0;
      for (const auto& e : row.entries) nr += (e.r == e.c ? 1.0 : 2.0) * e.v * e.v;
      nr = std::sqrt(nr);
      normA = std::max(normA, nr);
      worst = std::max(worst, (1.0 + std::abs(s.b(row.con))) / (1.0 + nr));
    }
    const double xi = std::max({10.0, sq, sq * worst});
    const double eta = std::max({10.0, sq, normA, s.C[k].norm()});
    X[k] = xi * MatrixXd::Identity(nk, nk);
    S[k] = eta * MatrixXd::Identity(nk, nk);
  }
  VectorXd y = VectorXd::Zero(m);
  VectorXd xf = VectorXd::Zero(nf);

  const double bnorm_orig = [&] {
    double t = 0.0;
    for (const auto& c : prob.constraints) t += c.rhs * c.rhs;
    return std::sqrt(t);
  }();
  const double cnorm = std::sqrt(std::pow(frob(s.C), 2) + s.cf.squaredNorm());

  auto export_solution = [&](Status st) {
    init_output();
    for (std::size_t k = 0; k < nb; ++k) {
      sol.X[k] = X[k];
      sol.S[k] = S[k];
    }
    sol.xf = xf;
    for (int i = 0; i < m; ++i) sol.y(s.original[i]) = s.d(i) * y(i);
    sol.status = st;
    sol.residuals = residuals(prob, sol, trace_weight);
  };

  double best_merit = std::numeric_limits<double>::infinity();
  int best_iter = 0;
  int tiny_steps = 0;
  std::vector<double> primal_history;

  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    sol.iterations = iter;
    // Residuals in the scaled space, with the primal one mapped back to the
    // original row scaling for the stopping test.
    VectorXd rp = s.b - s.apply(X) - (nf ? VectorXd(s.Af * xf) : VectorXd::Zero(m));
    Blocks Ay = s.adjoint(y);
    Blocks Rd(nb);
    for (std::size_t k = 0; k < nb; ++k) Rd[k] = s.C[k] - S[k] - Ay[k];
    VectorXd rdf = nf ? VectorXd(s.cf - s.Af.transpose() * y) : VectorXd(0);
    const double pobj = dot(s.C, X) + (nf ? s.cf.dot(xf) : 0.0);
    const double dobj = s.b.dot(y);
    const double gap = dot(X, S);
    const double mu = gap / ntot;
    const double rel_p = (rp.array() / s.d.array()).matrix().norm() / (1.0 + bnorm_orig);
    const double rel_d = std::sqrt(std::pow(frob(Rd), 2) + (nf ? rdf.squaredNorm() : 0.0)) / (1.0 + cnorm);
    const double rel_gap = std::abs(gap) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (opts.verbose) {
      std::fprintf(stderr, "%3d pobj %+.6e dobj %+.6e rp %.2e rd %.2e gap %.2e mu %.2e\n", iter, pobj,
                   dobj, rel_p, rel_d, rel_gap, mu);
    }

    const bool feasible_point = prep.trace_penalty && rel_p <= opts.feas_tol;
    if (feasible_point || (rel_p <= opts.feas_tol && rel_d <= opts.feas_tol && rel_gap <= opts.gap_tol)) {
      bool psd = true;
      for (std::size_t k = 0; k < nb; ++k) {
        if (min_eig(X[k]) < -opts.eig_tol) psd = false;
      }
      if (psd) {
        export_solution(Status::optimal);
        sol.message = feasible_point ? "feasible point found" : "converged";
        return sol;
      }
    }

    if (dobj > 0.0) {
      VectorXd yo = VectorXd::Zero(m0);
      for (int i = 0; i < m; ++i) yo(s.original[i]) = s.d(i) * y(i);
      RayCheck rc = verify_ray(prob, yo, opts.ray_tol);
      if (rc.valid) {
        export_solution(Status::infeasible_certificate);
        sol.ray = yo / rc.bty;
        sol.message = "dual improving ray verified";
        return sol;
      }
    }

    if (iter == opts.max_iterations) break;

    const double merit = std::max({rel_p / opts.feas_tol, rel_d / opts.feas_tol, rel_gap / opts.gap_tol});
    if (merit < 0.9 * best_merit) {
      best_merit = merit;
      best_iter = iter;
    } else if (iter - best_iter > 30) {
      export_solution(Status::iteration_limit);
      sol.message = "stalled";
      return sol;
    }
    // Complementarity nearly exhausted while the primal residual creeps:
    // the typical signature of a weakly infeasible program.
    primal_history.push_back(rel_p);
    constexpr std::size_t kWindow = 15;
    if (rel_p > opts.feas_tol && rel_gap < 1e-4 && primal_history.size() > kWindow &&
        primal_history[primal_history.size() - 1 - kWindow] < 10.0 * rel_p) {
      export_solution(Status::iteration_limit);
      sol.message = "primal residual stalled after complementarity vanished";
      return sol;
    }

    Blocks W(nb);
    std::vector<Eigen::LLT<MatrixXd>> cholX(nb);
    std::vector<Eigen::LLT<MatrixXd>> cholS(nb);
    bool chol_ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      cholS[k].compute(S[k]);
      cholX[k].compute(X[k]);
      if (cholS[k].info() != Eigen::Success || cholX[k].info() != Eigen::Success) {
        chol_ok = false;
        break;
      }
      W[k] = cholS[k].solve(MatrixXd::Identity(s.n[k], s.n[k]));
      W[k] = sym(W[k]);
    }
    if (!chol_ok) {
      export_solution(Status::numerical_failure);
      sol.message = "iterate lost positive definiteness";
      return sol;
    }

    const auto tt0 = std::chrono::steady_clock::now();
    MatrixXd M = s.schur(X, W);
    const auto tt1 = std::chrono::steady_clock::now();
    KktFactor fac = factor(M, s.Af);
    if (opts.verbose) {
      const auto tt2 = std::chrono::steady_clock::now();
      std::fprintf(stderr, "    schur %.3fs factor %.3fs\n", std::chrono::duration<double>(tt1 - tt0).count(),
                   std::chrono::duration<double>(tt2 - tt1).count());
    }
    if (!fac.ok) {
      export_solution(Status::numerical_failure);
      sol.message = "Schur complement factorization failed";
      return sol;
    }

    auto direction = [&](double sigma_mu, const Blocks* corr, Blocks& dX, VectorXd& dy,
                         VectorXd& dxf, Blocks& dS) {
      Blocks G(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        G[k] = sigma_mu * W[k] - X[k] - X[k] * Rd[k] * W[k];
        if (corr) G[k] -= (*corr)[k] * W[k];
      }
      VectorXd h = rp - s.apply(G);
      solve_kkt(fac, M, s.Af, h, rdf, dy, dxf);
      auto expand = [&](const VectorXd& dyv, Blocks& dXo, Blocks& dSo) {
        Blocks Ady = s.adjoint(dyv);
        dSo.resize(nb);
        dXo.resize(nb);
        for (std::size_t k = 0; k < nb; ++k) {
          dSo[k] = Rd[k] - Ady[k];
          MatrixXd t = sigma_mu * W[k] - X[k] - X[k] * dSo[k] * W[k];
          if (corr) t -= (*corr)[k] * W[k];
          dXo[k] = sym(t);
        }
      };
      auto error = [&](const Blocks& dXv, const VectorXd& dyv, const VectorXd& dxfv, VectorXd& e, VectorXd& ef) {
        e = rp - s.apply(dXv);
        if (nf) e -= s.Af * dxfv;
        ef = nf ? VectorXd(rdf - s.Af.transpose() * dyv) : VectorXd(0);
        return std::sqrt(e.squaredNorm() + ef.squaredNorm());
      };
      expand(dy, dX, dS);
      // Refinement against the block operator, which is formed more
      // accurately than the assembled Schur matrix.
      VectorXd e;
      VectorXd ef;
      double err = error(dX, dy, dxf, e, ef);
      for (int it = 0; it < 3 && err > 0.0; ++it) {
        VectorXd cy;
        VectorXd cf;
        solve_kkt(fac, M, s.Af, e, ef, cy, cf);
        VectorXd dy2 = dy + cy;
        VectorXd dxf2 = dxf + cf;
        Blocks dX2;
        Blocks dS2;
        expand(dy2, dX2, dS2);
        VectorXd e2;
        VectorXd ef2;
        const double err2 = error(dX2, dy2, dxf2, e2, ef2);
        if (!(err2 < err)) break;
        dy = std::move(dy2);
        dxf = std::move(dxf2);
        dX = std::move(dX2);
        dS = std::move(dS2);
        const bool enough = err2 > 0.5 * err;
        err = err2;
        e = std::move(e2);
        ef = std::move(ef2);
        if (enough) break;
      }
    };

    auto steps = [&](const Blocks& dX, const Blocks& dS, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(cholX[k], dX[k]));
        ad = std::min(ad, max_step(cholS[k], dS[k]));
      }
    };

    Blocks dXa;
    Blocks dSa;
    VectorXd dya;
    VectorXd dxfa;
    direction(0.0, nullptr, dXa, dya, dxfa, dSa);
    double apa = 0.0;
    double ada = 0.0;
    steps(dXa, dSa, apa, ada);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double gap_a = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      gap_a += (X[k] + apa * dXa[k]).cwiseProduct(S[k] + ada * dSa[k]).sum();
    }
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(apa, ada), 2));
    double sigma = gap > 0 ? std::pow(std::max(0.0, gap_a) / gap, expon) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    Blocks corr(nb);
    for (std::size_t k = 0; k < nb; ++k) corr[k] = dXa[k] * dSa[k];
    Blocks dX;
    Blocks dS;
    VectorXd dy;
    VectorXd dxf;
    direction(sigma * mu, &corr, dX, dy, dxf, dS);
    double ap = 0.0;
    double ad = 0.0;
    steps(dX, dS, ap, ad);
    const double tau = std::min(0.98, 0.9 + 0.09 * std::min(apa, ada));
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    if (!std::isfinite(ap) || !std::isfinite(ad) || !dy.allFinite()) {
      export_solution(Status::numerical_failure);
      sol.message = "non-finite search direction";
      return sol;
    }
    if (std::max(ap, ad) < 1e-8) {
      if (++tiny_steps >= 3) {
        export_solution(Status::iteration_limit);
        sol.message = "step length collapsed";
        return sol;
      }
    } else {
      tiny_steps = 0;
    }

    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * dX[k]);
      S[k] = sym(S[k] + ad * dS[k]);
    }
    if (nf) xf += ap * dxf;
    y += ad * dy;
    if (opts.verbose) {
      VectorXd e = s.apply(dX) + (nf ? VectorXd(s.Af * dxf) : VectorXd::Zero(m)) - rp;
      std::fprintf(stderr, "    sigma %.2e ap %.2e ad %.2e dir_err %.2e\n", sigma, ap, ad, e.norm());
    }
  }
  export_solution(Status::iteration_limit);
  sol.message = "iteration cap reached";
  return sol;
}

}  // namespace zenosos::sdp
