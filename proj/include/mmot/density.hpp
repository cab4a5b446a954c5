#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmot/errors.hpp"
#include "mmot/quadrature.hpp"

namespace mmot {

/// A single-particle density on a 1D interval or a 2D box, normalized at
/// construction so that its integral over the domain equals the particle
/// count. Evaluation is pointwise; `knots` marks interior points where a 1D
/// density is not smooth so quadrature panels can avoid them.
class DensitySpec {
 public:
  using Fn1 = std::function<double(double)>;
  using Fn2 = std::function<double(double, double)>;

  static constexpr double kMassCheckTol = 1e-8;

  static DensitySpec make_1d(std::string name, Fn1 raw, double lo, double hi,
                             int particles, std::vector<double> knots = {}) {
    DensitySpec s;
    s.name_ = std::move(name);
    s.dim_ = 1;
    s.lo_ = {lo, 0.0};
    s.hi_ = {hi, 0.0};
    s.n_ = particles;
    s.knots_ = std::move(knots);
    const double raw_total = quad::integrate_1d(raw, lo, hi, 1e-13);
    if (!(raw_total > 0.0) || !std::isfinite(raw_total))
      throw DegenerateDensityError("density has non-positive total mass");
    const double scale = particles / raw_total;
    s.f1_ = [raw, scale](double x) { return scale * raw(x); };
    s.check_mass();
    return s;
  }

  static DensitySpec make_2d(std::string name, Fn2 raw, double xlo, double xhi,
                             double ylo, double yhi, int particles) {
    DensitySpec s;
    s.name_ = std::move(name);
    s.dim_ = 2;
    s.lo_ = {xlo, ylo};
    s.hi_ = {xhi, yhi};
    s.n_ = particles;
    const quad::Rect box{xlo, xhi, ylo, yhi};
    const double raw_total = quad::integrate_rect(raw, box, 1e-13);
    if (!(raw_total > 0.0) || !std::isfinite(raw_total))
      throw DegenerateDensityError("density has non-positive total mass");
    const double scale = particles / raw_total;
    s.f2_ = [raw, scale](double x, double y) { return scale * raw(x, y); };
    s.check_mass();
    return s;
  }

  /// The benchmark densities system1..system8.
  static DensitySpec builtin(const std::string& which);

  int dimension() const { return dim_; }
  int particles() const { return n_; }
  const std::string& name() const { return name_; }
  double lo(int axis = 0) const { return lo_[axis]; }
  double hi(int axis = 0) const { return hi_[axis]; }
  const std::vector<double>& knots() const { return knots_; }
  quad::Rect box() const { return {lo_[0], hi_[0], lo_[1], hi_[1]}; }
  double domain_measure() const {
    return dim_ == 1 ? hi_[0] - lo_[0]
                     : (hi_[0] - lo_[0]) * (hi_[1] - lo_[1]);
  }

  double operator()(double x) const { return f1_(x); }
  double operator()(double x, double y) const { return f2_(x, y); }

  /// ∫ over [a,b] (1D) with panels split at the declared knots.
  double mass_1d(double a, double b, double tol = 1e-12) const {
    return quad::integrate_1d(f1_, a, b, tol, knots_);
  }
  /// ∫ over a sub-rectangle (2D).
  double mass_2d(const quad::Rect& r, double tol = 1e-12) const {
    return quad::integrate_rect(f2_, r, tol);
  }

 private:
  void check_mass() const {
    const double total = dim_ == 1 ? mass_1d(lo_[0], hi_[0], 1e-12)
                                   : mass_2d(box(), 1e-12);
    if (std::abs(total - n_) > kMassCheckTol * n_)
      throw DegenerateDensityError("normalized mass deviates from particle count");
  }

  std::string name_;
  int dim_ = 1;
  std::array<double, 2> lo_{0, 0}, hi_{0, 0};
  int n_ = 0;
  Fn1 f1_;
  Fn2 f2_;
  std::vector<double> knots_;
};

namespace detail {

inline double sq(double t) { return t * t; }

struct Gaussian2 {
  double w, cx, cy, alpha;
  double operator()(double x, double y) const {
    return w * std::exp(-alpha * (sq(x - cx) + sq(y - cy)));
  }
};

}  // namespace detail

inline DensitySpec DensitySpec::builtin(const std::string& which) {
  using detail::sq;
  const double pi = std::acos(-1.0);
  if (which == "system1")
    return make_1d("system1",
                   [pi](double x) { return std::cos(pi * x) + 1.0; }, -1, 1, 3);
  if (which == "system2")
    return make_1d(
        "system2",
        [](double x) {
          return 2.0 * std::exp(-6.0 * sq(x + 0.5)) +
                 1.5 * std::exp(-4.0 * sq(x - 0.5));
        },
        -1, 1, 3);
  if (which == "system3")
    return make_1d("system3", [](double x) { return std::exp(-std::abs(x)); },
                   -5, 5, 3, {0.0});
  if (which == "system4") {
    const double inv_sqrt_pi = 1.0 / std::sqrt(pi);
    return make_1d("system4",
                   [inv_sqrt_pi](double x) {
                     return std::exp(-sq(x) * inv_sqrt_pi);
                   },
                   -2, 2, 7);
  }
  if (which == "system5")
    return make_1d(
        "system5",
        [](double x) {
          return std::exp(-3.0 * sq(x + 3)) + std::exp(-3.0 * sq(x + 2)) +
                 std::exp(-2.0 * sq(x + 1)) + std::exp(-sq(x)) +
                 std::exp(-2.0 * sq(x - 1)) + std::exp(-3.0 * sq(x - 2)) +
                 std::exp(-3.0 * sq(x - 3));
        },
        -4, 4, 7);
  if (which == "system6")
    return make_1d(
        "system6",
        [](double x) {
          return std::exp(-8.0 * sq(x + 2.7)) + std::exp(-8.0 * sq(x + 2.025)) +
                 std::exp(-8.0 * sq(x + 1.35)) + std::exp(-8.0 * sq(x + 0.675)) +
                 std::exp(-5.0 * sq(x - 0.5)) + std::exp(-5.0 * sq(x - 1.5)) +
                 std::exp(-5.0 * sq(x - 2.5));
        },
        -3, 3, 7);
  if (which == "system7")
    return make_2d(
        "system7",
        [](double x, double y) {
          return std::exp(-2.5 * (sq(x + 1.5) + sq(y))) +
                 0.5 * std::exp(-2.5 * (sq(x - 1.5) + sq(y)));
        },
        -3, 3, -2, 2, 3);
  if (which == "system8")
    return make_2d(
        "system8",
        [](double x, double y) {
          return std::exp(-2.5 * (sq(x + 1.032) + sq(y + 0.84))) +
                 std::exp(-2.5 * (sq(x) + sq(y - 0.96))) +
                 std::exp(-2.5 * (sq(x - 1.032) + sq(y + 0.84)));
        },
        -2.5, 2.5, -2.5, 2.5, 3);
  throw ConfigError({"unknown builtin system '" + which + "'"});
}

/// Gaussian-mixture density from explicit terms, for user-defined systems.
inline DensitySpec gaussian_mixture_1d(std::string name,
                                       std::vector<std::array<double, 3>> terms,
                                       double lo, double hi, int particles) {
  // terms: {weight, center, alpha} -> w * exp(-alpha (x-c)^2)
  return DensitySpec::make_1d(
      std::move(name),
      [terms](double x) {
        double s = 0.0;
        for (const auto& t : terms)
          s += t[0] * std::exp(-t[2] * detail::sq(x - t[1]));
        return s;
      },
      lo, hi, particles);
}

inline DensitySpec gaussian_mixture_2d(std::string name,
                                       std::vector<std::array<double, 4>> terms,
                                       double xlo, double xhi, double ylo,
                                       double yhi, int particles) {
  // terms: {weight, cx, cy, alpha}
  return DensitySpec::make_2d(
      std::move(name),
      [terms](double x, double y) {
        double s = 0.0;
        for (const auto& t : terms)
          s += detail::Gaussian2{t[0], t[1], t[2], t[3]}(x, y);
        return s;
      },
      xlo, xhi, ylo, yhi, particles);
}

}  // namespace mmot
