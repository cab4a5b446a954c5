#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "mmot/density.hpp"
#include "mmot/mesh.hpp"
#include "mmot/pbcd.hpp"
#include "mmot/projection.hpp"

namespace mmot {

/// Approximate Monge maps at the grid barycenters: for block i and row j,
/// T_i(a_j) = sum_k a_k x_{i,jk} / sum_l x_{i,jl}. Rows with vanishing sum
/// are flagged undefined.
struct MapTable {
  int dim = 1;
  // [block][row] -> mapped point; undefined rows are nullopt.
  std::vector<std::vector<std::optional<std::array<double, 2>>>> points;
};

inline MapTable transport_maps(const PlanSet& Z, const Mesh& mesh) {
  MapTable t;
  t.dim = mesh.dim;
  const int K = mesh.size();
  t.points.resize(Z.block_count());
  for (int i = 0; i < Z.block_count(); ++i) {
    const MatrixXd& X = Z.blocks[i];
    auto& rows = t.points[i];
    rows.resize(K);
    for (int j = 0; j < K; ++j) {
      const double total = X.row(j).sum();
      if (!(total > 0)) {
        rows[j] = std::nullopt;
        continue;
      }
      std::array<double, 2> pt{0, 0};
      for (int k = 0; k < K; ++k) {
        const double w = X(j, k);
        if (w != 0.0) {
          pt[0] += w * mesh.elements[k].barycenter[0];
          pt[1] += w * mesh.elements[k].barycenter[1];
        }
      }
      pt[0] /= total;
      pt[1] /= total;
      rows[j] = pt;
    }
  }
  return t;
}

/// The known 1D optimal maps, built from CDF shifts: with F(x) = ∫_a^x rho,
/// T_i(x) = F^{-1}(F(x) + i - 1) when that stays within total mass N, and
/// wraps by N otherwise. Measure preserving by construction.
class SeidlMaps1d {
 public:
  explicit SeidlMaps1d(const DensitySpec& spec, int panels = 4096)
      : n_(spec.particles()), a_(spec.lo()), b_(spec.hi()) {
    if (spec.dimension() != 1)
      throw Error("the 1D map oracle needs a 1D density");
    grid_.reserve(panels + 1);
    std::vector<double> pts = {a_, b_};
    for (double k : spec.knots())
      if (k > a_ && k < b_) pts.push_back(k);
    std::sort(pts.begin(), pts.end());
    const int per = std::max(1, panels / static_cast<int>(pts.size() - 1));
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
      const double h = (pts[s + 1] - pts[s]) / per;
      for (int i = 0; i < per; ++i) grid_.push_back(pts[s] + i * h);
    }
    grid_.push_back(b_);
    cum_.resize(grid_.size());
    cum_[0] = 0.0;
    rho_ = [spec](double x) { return spec(x); };
    for (std::size_t i = 1; i < grid_.size(); ++i)
      cum_[i] = cum_[i - 1] + quad::gauss16(rho_, grid_[i - 1], grid_[i]);
  }

  double total_mass() const { return cum_.back(); }

  double cdf(double x) const {
    if (x <= a_) return 0.0;
    if (x >= b_) return cum_.back();
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    return cum_[i] + quad::gauss16(rho_, grid_[i], x);
  }

  double cdf_inverse(double m) const {
    m = std::clamp(m, 0.0, cum_.back());
    auto it = std::upper_bound(cum_.begin(), cum_.end(), m);
    std::size_t i = it == cum_.begin()
                        ? 0
                        : static_cast<std::size_t>(it - cum_.begin()) - 1;
    i = std::min(i, grid_.size() - 2);
    double lo = grid_[i], hi = grid_[i + 1];
    double flo = cum_[i] - m;
    for (int k = 0; k < 90 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++k) {
      const double mid = 0.5 * (lo + hi);
      const double fm = cdf(mid) - m;
      if ((fm <= 0) == (flo <= 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// T_i for i in {2,..,N}.
  double map(int i, double x) const {
    const double shifted = cdf(x) + static_cast<double>(i - 1);
    if (shifted <= n_ + 1e-14) return cdf_inverse(shifted);
    return cdf_inverse(shifted - n_);
  }

  int particles() const { return n_; }

 private:
  int n_;
  double a_, b_;
  std::function<double(double)> rho_;
  std::vector<double> grid_;
  std::vector<double> cum_;
};

inline SeidlMaps1d seidl_maps_1d(const DensitySpec& spec) {
  return SeidlMaps1d(spec);
}

struct AvgErrorResult {
  double err = 0.0;
  // Permutation applied to the computed blocks when matching oracle
  // branches (identity-sized when the sorted-image heuristic was used).
  std::vector<int> assignment;
  bool sorted_heuristic = false;
};

/// err(K, Omega) = (1/(K |Omega|)) sum_rows sum_branches |T_j(a_i) - T_j^K(a_i)|
/// for 1D plans. Computed blocks are matched to oracle branches by the
/// minimum-error permutation when N <= 4 and per-point sorted images above.
inline AvgErrorResult avg_error(const MapTable& maps, const SeidlMaps1d& oracle,
                                const Mesh& mesh, double domain_measure) {
  const int nb = static_cast<int>(maps.points.size());
  const int K = mesh.size();
  AvgErrorResult out;

  // Oracle branch values at the barycenters.
  std::vector<std::vector<double>> target(nb, std::vector<double>(K));
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < K; ++j)
      target[i][j] = oracle.map(i + 2, mesh.elements[j].barycenter[0]);

  const auto branch_error = [&](int block, int branch) {
    double s = 0.0;
    for (int j = 0; j < K; ++j) {
      if (!maps.points[block][j]) continue;
      s += std::abs((*maps.points[block][j])[0] - target[branch][j]);
    }
    return s;
  };

  const double scale = 1.0 / (K * domain_measure);
  if (nb <= 3) {
    std::vector<int> perm(nb);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm = perm;
    do {
      double s = 0.0;
      for (int i = 0; i < nb; ++i) s += branch_error(perm[i], i);
      if (s < best) {
        best = s;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.err = best * scale;
    out.assignment = best_perm;
    return out;
  }

  // Sorted-image matching per grid point.
  out.sorted_heuristic = true;
  out.assignment.resize(nb);
  std::iota(out.assignment.begin(), out.assignment.end(), 0);
  double s = 0.0;
  std::vector<double> got(nb), want(nb);
  for (int j = 0; j < K; ++j) {
    int defined = 0;
    for (int i = 0; i < nb; ++i)
      if (maps.points[i][j]) got[defined++] = (*maps.points[i][j])[0];
    if (defined < nb) continue;
    for (int i = 0; i < nb; ++i) want[i] = target[i][j];
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (int i = 0; i < nb; ++i) s += std::abs(got[i] - want[i]);
  }
  out.err = s * scale;
  return out;
}

struct KktCertificate {
  double stationarity = 0.0;
  double complementarity = 0.0;
  double feas = 0.0;
  double overall = 0.0;
  std::vector<VectorXd> lambdas;
};

namespace detail {

// Least-squares fit of lambda to the gradient on a support mask:
// min || mask .* (G - B*(lambda)) ||_F, solved by CG on the normal
// equations B(mask .* B*(lambda)) = B(mask .* G).
inline VectorXd fit_multiplier(const MatrixXd& G, const Eigen::ArrayXXd& mask,
                               const ProblemData& p) {
  const VectorXd nu = null_direction(p);
  MatrixXd masked = G;
  masked.array() *= mask;
  VectorXd rhs = apply_B(masked, p);
  deflate(rhs, nu);
  const double eps = 1e-13 * (1.0 + rhs.norm());
  const VectorXd pre = (jacobi_diagonal(mask, p).array() + eps).matrix();

  VectorXd x = VectorXd::Zero(rhs.size());
  VectorXd r = rhs;
  VectorXd z = (r.array() / pre.array()).matrix();
  deflate(z, nu);
  VectorXd d = z;
  double rz = r.dot(z);
  const double target = 1e-13 * rhs.norm();
  const long maxit = 40L * (2 * p.K + 1);
  for (long it = 0; it < maxit && r.norm() > target; ++it) {
    VectorXd Vd = apply_V(d, mask, p) + eps * d;
    deflate(Vd, nu);
    const double dVd = d.dot(Vd);
    if (!(dVd > 0)) break;
    const double alpha = rz / dVd;
    x += alpha * d;
    r -= alpha * Vd;
    z = (r.array() / pre.array()).matrix();
    deflate(z, nu);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  return x;
}

}  // namespace detail

/// Fits multipliers lambda_i to each block gradient by least squares on the
/// plan's support and reports the residuals of the first-order conditions:
/// (a) |Phi_i| on the support plus the negative part of Phi_i off it,
/// (b) sum |Phi_i .* X_i|, (c) Feas(Z); overall = max of the three.
inline KktCertificate kkt_certificate(const PlanSet& Z, const ProblemData& p,
                                      double support_threshold = 1e-8) {
  KktCertificate cert;
  for (int i = 0; i < Z.block_count(); ++i) {
    const MatrixXd G = block_gradient(Z, i + 2, p);
    const Eigen::ArrayXXd supp =
        (Z.blocks[i].array() > support_threshold).cast<double>();
    const VectorXd lambda = detail::fit_multiplier(G, supp, p);
    const MatrixXd Phi = G - apply_B_adjoint(lambda, p);

    const double on_supp = (Phi.array() * supp).matrix().norm();
    const double neg_off =
        (Phi.array().min(0.0) * (1.0 - supp)).matrix().norm();
    cert.stationarity = std::max(cert.stationarity, on_supp + neg_off);
    cert.complementarity = std::max(
        cert.complementarity, (Phi.array() * Z.blocks[i].array()).abs().sum());
    cert.lambdas.push_back(lambda);
  }
  cert.feas = feasibility(Z, p);
  cert.overall =
      std::max({cert.stationarity, cert.complementarity, cert.feas});
  return cert;
}

/// Points for a 2D slice figure: barycenters inside the disk around
/// `center`, plus their images under each transport block.
struct SlicePoints {
  std::vector<std::array<double, 2>> omega;
  std::vector<std::vector<std::array<double, 2>>> images;  // per block
};

inline SlicePoints slice_points(const PlanSet& Z, const Mesh& mesh,
                                std::array<double, 2> center, double radius) {
  const MapTable maps = transport_maps(Z, mesh);
  SlicePoints out;
  out.images.resize(Z.block_count());
  for (int j = 0; j < mesh.size(); ++j) {
    const auto& a = mesh.elements[j].barycenter;
    const double dx = a[0] - center[0], dy = a[1] - center[1];
    if (dx * dx + dy * dy > radius * radius) continue;
    out.omega.push_back(a);
    for (int i = 0; i < Z.block_count(); ++i)
      if (maps.points[i][j]) out.images[i].push_back(*maps.points[i][j]);
  }
  return out;
}

}  // namespace mmot
