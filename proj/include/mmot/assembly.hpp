#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "mmot/density.hpp"
#include "mmot/errors.hpp"
#include "mmot/mesh.hpp"

namespace mmot {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Discretized instance: element-averaged marginals, volumes, Coulomb cost
/// matrix with zero diagonal, penalty weight, and the constraint right-hand
/// side b = [1^T  rho^T  0]^T. Caches the scaled matrices every solver step
/// needs: M2 = Xi C Xi, L = Lambda Xi C Xi, d1 = vol .* varrho.
struct ProblemData {
  int K = 0;
  int N = 0;
  VectorXd varrho;
  VectorXd vol;
  MatrixXd C;
  double beta = 0.0;
  VectorXd b;

  MatrixXd M2;
  MatrixXd L;
  VectorXd d1;

  void finalize() {
    K = static_cast<int>(vol.size());
    b = VectorXd::Zero(2 * K + 1);
    b.head(K).setOnes();
    b.segment(K, K) = varrho;
    d1 = vol.cwiseProduct(varrho);
    M2 = vol.asDiagonal() * C * vol.asDiagonal();
    L = varrho.asDiagonal() * M2;
  }
};

/// The decision variables: N-1 transport blocks X_2,...,X_N, each K x K.
struct PlanSet {
  std::vector<MatrixXd> blocks;

  int block_count() const { return static_cast<int>(blocks.size()); }
  int K() const { return blocks.empty() ? 0 : static_cast<int>(blocks[0].rows()); }

  static PlanSet zero(int nblocks, int K) {
    PlanSet z;
    z.blocks.assign(nblocks, MatrixXd::Zero(K, K));
    return z;
  }

  double distance(const PlanSet& other) const {
    double s = 0.0;
    for (int i = 0; i < block_count(); ++i)
      s += (blocks[i] - other.blocks[i]).squaredNorm();
    return std::sqrt(s);
  }
};

namespace cost {

// t ln t - t, extended by 0 at t = 0; antiderivative kernel for the 1D
// double integral of 1/|x-y|.
inline double psi(double t) { return t > 0.0 ? t * (std::log(t) - 1.0) : 0.0; }

/// Exact (1/(|A||B|)) ∫_A ∫_B dx dy / |x-y| for disjoint intervals.
inline double coefficient_1d(double a, double b, double c, double d) {
  if (a > c) {
    std::swap(a, c);
    std::swap(b, d);
  }
  if (b > c + 1e-14 * (std::abs(b) + std::abs(c) + 1.0))
    throw Error("cost coefficient requires disjoint intervals");
  const double integral = psi(d - a) - psi(d - b) - psi(c - a) + psi(c - b);
  return integral / ((b - a) * (d - c));
}

namespace detail2d {

// Piecewise-linear correlation T(u) = |A ∩ (B+u)| of two intervals, given as
// up to three linear pieces alpha + beta*u on [knot_i, knot_{i+1}].
struct Correlation {
  std::array<double, 4> knot;
  std::array<double, 3> alpha, beta;
  int pieces = 0;
};

inline Correlation correlation(double a1, double a2, double b1, double b2) {
  const double t1 = a1 - b2, t4 = a2 - b1;
  double t2 = a1 - b1, t3 = a2 - b2;
  if (t2 > t3) std::swap(t2, t3);
  const double w = std::min(a2 - a1, b2 - b1);
  Correlation c;
  c.pieces = 0;
  if (t2 > t1) {
    c.knot[c.pieces] = t1;
    c.alpha[c.pieces] = -t1;
    c.beta[c.pieces] = 1.0;
    ++c.pieces;
  }
  if (t3 > t2) {
    c.knot[c.pieces] = t2;
    c.alpha[c.pieces] = w;
    c.beta[c.pieces] = 0.0;
    ++c.pieces;
  }
  if (t4 > t3) {
    c.knot[c.pieces] = t3;
    c.alpha[c.pieces] = t4;
    c.beta[c.pieces] = -1.0;
    ++c.pieces;
  }
  c.knot[c.pieces] = t4;
  return c;
}

inline double safe_asinh_term(double p, double q) {
  // p * asinh(q / |p|), continuous extension 0 at p = 0.
  if (p == 0.0) return 0.0;
  return p * std::asinh(q / std::abs(p));
}

// Antiderivatives F_pq with d2 F / du dv = u^p v^q / sqrt(u^2+v^2); evaluated
// as double differences over piece rectangles, so terms depending on one
// variable alone may be dropped.
inline double F00(double u, double v) {
  return safe_asinh_term(v, u) + safe_asinh_term(u, v);
}
inline double F10(double u, double v) {
  const double r = std::hypot(u, v);
  return 0.5 * (v * r + u * safe_asinh_term(u, v));
}
inline double F01(double u, double v) {
  const double r = std::hypot(u, v);
  return 0.5 * (u * r + v * safe_asinh_term(v, u));
}
inline double F11(double u, double v) {
  const double r = std::hypot(u, v);
  return r * r * r / 3.0;
}

template <double (*F)(double, double)>
inline double box_diff(double u1, double u2, double v1, double v2) {
  return F(u2, v2) - F(u1, v2) - F(u2, v1) + F(u1, v1);
}

}  // namespace detail2d

/// Exact (1/(|A||B|)) ∫_A ∫_B dr dr' / |r-r'| for rectangles with disjoint
/// interiors (touching edges allowed). Reduction: with u = x-x', v = y-y',
/// the integral equals ∫∫ T_x(u) T_y(v) / sqrt(u^2+v^2) du dv over the
/// correlation trapezoids, which has elementary antiderivatives.
inline double coefficient_2d(const quad::Rect& A, const quad::Rect& B) {
  const double ox = std::min(A.xhi, B.xhi) - std::max(A.xlo, B.xlo);
  const double oy = std::min(A.yhi, B.yhi) - std::max(A.ylo, B.ylo);
  const double scale = 1e-14 * (std::abs(A.xhi) + std::abs(B.xhi) + 1.0);
  if (ox > scale && oy > scale)
    throw Error("cost coefficient requires rectangles with disjoint interiors");

  using namespace detail2d;
  const Correlation tx = correlation(A.xlo, A.xhi, B.xlo, B.xhi);
  const Correlation ty = correlation(A.ylo, A.yhi, B.ylo, B.yhi);
  double integral = 0.0;
  for (int i = 0; i < tx.pieces; ++i) {
    const double u1 = tx.knot[i], u2 = tx.knot[i + 1];
    for (int j = 0; j < ty.pieces; ++j) {
      const double v1 = ty.knot[j], v2 = ty.knot[j + 1];
      const double ax = tx.alpha[i], bx = tx.beta[i];
      const double ay = ty.alpha[j], by = ty.beta[j];
      double part = 0.0;
      if (ax != 0.0 && ay != 0.0) part += ax * ay * box_diff<F00>(u1, u2, v1, v2);
      if (bx != 0.0 && ay != 0.0) part += bx * ay * box_diff<F10>(u1, u2, v1, v2);
      if (ax != 0.0 && by != 0.0) part += ax * by * box_diff<F01>(u1, u2, v1, v2);
      if (bx != 0.0 && by != 0.0) part += bx * by * box_diff<F11>(u1, u2, v1, v2);
      integral += part;
    }
  }
  return integral / (A.area() * B.area());
}

}  // namespace cost

/// Effective Coulomb interaction between two distinct mesh elements,
/// (1/(|e_j||e_k|)) ∫∫ 1/|r-r'|, evaluated in closed form.
inline double cost_coefficient(const Element& ej, const Element& ek, int dim) {
  if (dim == 1) return cost::coefficient_1d(ej.lo(), ej.hi(), ek.lo(), ek.hi());
  return cost::coefficient_2d(ej.as_rect(), ek.as_rect());
}

namespace detail {

inline void parallel_rows(int K, int threads, const std::function<void(int)>& row_job) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int j = 0; j < K; ++j) row_job(j);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < K; j = next.fetch_add(1)) row_job(j);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Assembles the discretized problem: marginal averages by adaptive
/// quadrature, exact pairwise cost coefficients, zero diagonal.
inline ProblemData assemble(const Mesh& mesh, const DensitySpec& spec,
                            double beta, int threads = 1) {
  ProblemData p;
  const int K = mesh.size();
  p.N = spec.particles();
  p.beta = beta;
  p.vol.resize(K);
  p.varrho.resize(K);
  for (int k = 0; k < K; ++k) {
    const Element& e = mesh.elements[k];
    p.vol(k) = e.volume;
    const double m = mesh.dim == 1 ? spec.mass_1d(e.lo(), e.hi(), 1e-12)
                                   : spec.mass_2d(e.as_rect(), 1e-12);
    if (!std::isfinite(m) || m < 0)
      throw AssemblyError("marginal quadrature failed", k);
    p.varrho(k) = m / e.volume;
  }
  p.C = MatrixXd::Zero(K, K);
  detail::parallel_rows(K, threads, [&](int j) {
    for (int k = j + 1; k < K; ++k) {
      const double c = cost_coefficient(mesh.elements[j], mesh.elements[k], mesh.dim);
      if (!std::isfinite(c) || c <= 0.0)
        throw AssemblyError("cost coefficient evaluation failed", j);
      p.C(j, k) = c;
      p.C(k, j) = c;
    }
  });
  p.finalize();
  return p;
}

/// B(W) = [e^T W^T, varrho^T Xi W, Tr W]^T, the constraint operator of S.
inline VectorXd apply_B(const MatrixXd& W, const ProblemData& p) {
  VectorXd out(2 * p.K + 1);
  out.head(p.K) = W * p.vol;
  out.segment(p.K, p.K) = W.transpose() * p.d1;
  out(2 * p.K) = W.trace();
  return out;
}

/// Adjoint: B*(lambda)_{jk} = lambda1_j |e_k| + |e_j| varrho_j lambda2_k
/// + lambda3 delta_{jk}.
inline MatrixXd apply_B_adjoint(const VectorXd& lambda, const ProblemData& p) {
  MatrixXd out = lambda.head(p.K) * p.vol.transpose();
  out.noalias() += p.d1 * lambda.segment(p.K, p.K).transpose();
  out.diagonal().array() += lambda(2 * p.K);
  return out;
}

/// Repulsive energy f(Z) = sum_i <X_i, L> + sum_{i<j} <X_i, D1 X_j M2>.
inline double energy(const PlanSet& Z, const ProblemData& p) {
  const int nb = Z.block_count();
  double f = 0.0;
  for (int i = 0; i < nb; ++i) f += Z.blocks[i].cwiseProduct(p.L).sum();
  for (int i = 0; i + 1 < nb; ++i) {
    MatrixXd P = p.d1.asDiagonal() * Z.blocks[i] * p.M2;
    for (int j = i + 1; j < nb; ++j) f += P.cwiseProduct(Z.blocks[j]).sum();
  }
  return f;
}

/// sum_{i<j} <X_i, X_j>, the generalized complementarity violation.
inline double comp_violation(const PlanSet& Z) {
  double s = 0.0;
  for (int i = 0; i + 1 < Z.block_count(); ++i)
    for (int j = i + 1; j < Z.block_count(); ++j)
      s += Z.blocks[i].cwiseProduct(Z.blocks[j]).sum();
  return s;
}

/// Penalized energy f_beta = f + beta * comp_violation.
inline double penalized_energy(const PlanSet& Z, const ProblemData& p) {
  return energy(Z, p) + p.beta * comp_violation(Z);
}

/// Exact gradient of f_beta in block i (index: blocks[i-2] holds X_i):
/// G_i = L + D1 (sum_{j != i} X_j) M2 + beta sum_{j != i} X_j.
/// The caller supplies Z in whatever Gauss-Seidel state it wants graded.
inline MatrixXd block_gradient(const PlanSet& Z, int block_index,
                               const ProblemData& p) {
  const int nb = Z.block_count();
  if (block_index < 2 || block_index > nb + 1)
    throw Error("block index out of range");
  MatrixXd S = MatrixXd::Zero(p.K, p.K);
  for (int j = 0; j < nb; ++j)
    if (j != block_index - 2) S += Z.blocks[j];
  MatrixXd G = p.L;
  G.noalias() += p.d1.asDiagonal() * S * p.M2;
  G += p.beta * S;
  return G;
}

}  // namespace mmot
