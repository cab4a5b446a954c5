#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "mmot/assembly.hpp"
#include "mmot/errors.hpp"

namespace mmot {

/// Multipliers for B(W) = b plus the support mask of the primal candidate
/// W(lambda) = max(0, Y + B*(lambda)). Reusable as a warm start.
struct DualState {
  VectorXd lambda;
  Eigen::ArrayXXd active;  // 1.0 where W(lambda) > 0
};

struct ProjectionOptions {
  double eps_inner = 1e-9;
  long max_newton = 100000;
};

struct ProjectionStats {
  long newton_iters = 0;
  long cg_iters = 0;
  double final_residual = 0.0;
  bool converged = false;
};

struct ProjectionResult {
  MatrixXd W;
  DualState dual;
  ProjectionStats stats;
};

/// Lagrange dual of the projection of Y onto S:
/// theta(lambda) = <lambda,b> - 0.5 ||max(0, Y + B*(lambda))||_F^2
///               + 0.5 ||Y||_F^2, gradient b - B(max(0, Y + B*(lambda))).
/// Concave; its maximum equals the primal value 0.5 ||W* - Y||_F^2.
inline std::pair<double, VectorXd> dual_objective(const VectorXd& lambda,
                                                  const MatrixXd& Y,
                                                  const ProblemData& p) {
  const MatrixXd W = (Y + apply_B_adjoint(lambda, p)).cwiseMax(0.0);
  const double value =
      lambda.dot(p.b) - 0.5 * W.squaredNorm() + 0.5 * Y.squaredNorm();
  return {value, p.b - apply_B(W, p)};
}

namespace detail {

// Direction with B*(nu) = 0: the one redundancy between volume-weighted row
// sums and mass-weighted column sums. Deflated from all CG iterates.
inline VectorXd null_direction(const ProblemData& p) {
  VectorXd nu = VectorXd::Zero(2 * p.K + 1);
  nu.head(p.K) = p.d1;
  nu.segment(p.K, p.K) = -p.vol;
  return nu / nu.norm();
}

inline void deflate(VectorXd& v, const VectorXd& nu) { v -= nu.dot(v) * nu; }

// V(lambda) u = B(active .* B*(u)), the generalized Hessian of -theta.
inline VectorXd apply_V(const VectorXd& u, const Eigen::ArrayXXd& active,
                        const ProblemData& p) {
  MatrixXd M = apply_B_adjoint(u, p);
  M.array() *= active;
  return apply_B(M, p);
}

// The two K x K diagonal blocks of V plus the scalar trace block. Rows of
// the first constraint group touch disjoint unknowns, so both blocks are
// themselves diagonal and block Jacobi reduces to elementwise division.
inline VectorXd jacobi_diagonal(const Eigen::ArrayXXd& active,
                                const ProblemData& p) {
  VectorXd d(2 * p.K + 1);
  const Eigen::ArrayXd vol2 = p.vol.array().square();
  const Eigen::ArrayXd d12 = p.d1.array().square();
  for (int j = 0; j < p.K; ++j)
    d(j) = (active.row(j).transpose() * vol2).sum();
  for (int k = 0; k < p.K; ++k) d(p.K + k) = (active.col(k) * d12).sum();
  double tr = 0.0;
  for (int j = 0; j < p.K; ++j) tr += active(j, j);
  d(2 * p.K) = tr;
  return d;
}

}  // namespace detail

/// Solves (V + eps I) d = g in Im(B) by preconditioned CG with the block
/// Jacobi preconditioner, eps = max(1e-12, 1e-4 ||g||) and relative CG
/// tolerance min(0.1, ||g||^{1/2}) unless `eps_cg` >= 0 overrides it. Falls
/// back to the steepest-ascent direction after 10(2K+1) CG iterations.
inline VectorXd newton_system_solve(const DualState& state, const MatrixXd& Y,
                                    const ProblemData& p, double eps_cg = -1.0,
                                    long* cg_counter = nullptr) {
  const VectorXd g = dual_objective(state.lambda, Y, p).second;
  const double gnorm = g.norm();
  const double eps = std::max(1e-12, 1e-4 * gnorm);
  if (eps_cg < 0.0) eps_cg = std::min(0.1, std::sqrt(gnorm));
  const VectorXd nu = detail::null_direction(p);
  const VectorXd pre =
      (detail::jacobi_diagonal(state.active, p).array() + eps).matrix();

  VectorXd rhs = g;
  detail::deflate(rhs, nu);
  VectorXd x = VectorXd::Zero(rhs.size());
  VectorXd r = rhs;
  VectorXd z = (r.array() / pre.array()).matrix();
  detail::deflate(z, nu);
  VectorXd d = z;
  double rz = r.dot(z);
  const double target = eps_cg * rhs.norm();
  const long maxit = 10L * (2 * p.K + 1);
  long it = 0;
  for (; it < maxit && r.norm() > target; ++it) {
    VectorXd Vd = detail::apply_V(d, state.active, p) + eps * d;
    detail::deflate(Vd, nu);
    const double dVd = d.dot(Vd);
    if (!(dVd > 0)) break;
    const double alpha = rz / dVd;
    x += alpha * d;
    r -= alpha * Vd;
    z = (r.array() / pre.array()).matrix();
    detail::deflate(z, nu);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  if (cg_counter) *cg_counter += it;
  if (it >= maxit && r.norm() > target) return rhs;  // steepest ascent
  return x;
}

/// Euclidean projection of Y onto
/// S = {W : We = 1, W^T Xi varrho = varrho, Tr W = 0, W >= 0}: semismooth
/// Newton ascent on the dual with Armijo backtracking (factor 0.5, slope
/// 1e-4). Returns W >= 0 exactly with ||B(W) - b|| <= eps_inner, plus the
/// dual state for warm-starting the next call.
inline ProjectionResult project_onto_S(const MatrixXd& Y, const ProblemData& p,
                                       const ProjectionOptions& opts = {},
                                       const DualState* warm = nullptr) {
  ProjectionResult res;
  VectorXd lambda = (warm && warm->lambda.size() == 2 * p.K + 1)
                        ? warm->lambda
                        : VectorXd::Zero(2 * p.K + 1);
  const double blow_up = 1e13 * (1.0 + Y.norm() + p.b.norm());

  MatrixXd A = Y + apply_B_adjoint(lambda, p);
  MatrixXd W = A.cwiseMax(0.0);
  VectorXd g = p.b - apply_B(W, p);

  long iter = 0;
  for (; iter < opts.max_newton; ++iter) {
    const double feas = g.norm();
    if (feas <= opts.eps_inner) {
      res.W = std::move(W);
      res.dual.lambda = std::move(lambda);
      res.dual.active = (A.array() > 0.0).cast<double>();
      res.stats.newton_iters = iter;
      res.stats.final_residual = feas;
      res.stats.converged = true;
      return res;
    }
    if (lambda.norm() > blow_up)
      throw ProjectionError("projection target set appears infeasible", feas,
                            iter);

    DualState state;
    state.lambda = lambda;
    state.active = (A.array() > 0.0).cast<double>();
    VectorXd dir = newton_system_solve(state, Y, p, -1.0, &res.stats.cg_iters);
    double slope = g.dot(dir);
    if (!(slope > 0)) {
      dir = g;
      slope = g.squaredNorm();
    }

    // Armijo on theta differences. The increment is evaluated as
    // t<dir,b> - 0.5 <W_t - W, W_t + W> so it stays accurate when
    // ||Y||^2 dwarfs the per-step progress.
    const MatrixXd Bdir = apply_B_adjoint(dir, p);
    const double dir_b = dir.dot(p.b);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const MatrixXd A_trial = A + t * Bdir;
      const MatrixXd W_trial = A_trial.cwiseMax(0.0);
      const double delta =
          t * dir_b -
          0.5 * (W_trial - W).cwiseProduct(W_trial + W).sum();
      if (delta >= 1e-4 * t * slope) {
        lambda += t * dir;
        A = A_trial;
        W = W_trial;
        g = p.b - apply_B(W, p);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw ProjectionError("semismooth Newton stagnated", g.norm(), iter);
  }
  throw ProjectionError("semismooth Newton exhausted its iteration budget",
                        g.norm(), iter);
}

}  // namespace mmot
