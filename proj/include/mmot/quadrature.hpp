#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "mmot/errors.hpp"

namespace mmot::quad {

/// 16-point Gauss-Legendre rule on [-1,1].
struct Gauss16 {
  static constexpr std::array<double, 8> abscissae = {
      0.0950125098376374401853193, 0.2816035507792589132304605,
      0.4580167776572273863424194, 0.6178762444026437484466718,
      0.7554044083550030338951012, 0.8656312023878317438804679,
      0.9445750230732325760779884, 0.9894009349916499325961542};
  static constexpr std::array<double, 8> weights = {
      0.1894506104550684962853967, 0.1826034150449235888667637,
      0.1691565193950025381893121, 0.1495959888165767320815017,
      0.1246289712555338720524763, 0.0951585116824927848099251,
      0.0622535239386478928628438, 0.0271524594117540948517806};
};

/// Fixed 16-point Gauss-Legendre approximation of ∫_a^b f.
template <class F>
double gauss16(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double x = Gauss16::abscissae[i] * h;
    s += Gauss16::weights[i] * (f(c - x) + f(c + x));
  }
  return s * h;
}

namespace detail {

template <class F>
double adaptive_1d(const F& f, double a, double b, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double left = gauss16(f, a, m);
  const double right = gauss16(f, m, b);
  const double err = std::abs(left + right - whole);
  if (err <= tol || depth >= 48) return left + right;
  return adaptive_1d(f, a, m, left, 0.5 * tol, depth + 1) +
         adaptive_1d(f, m, b, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive panel integration of f over [a,b] to absolute tolerance `tol`.
/// `knots` lists interior points where f may be non-smooth; panels never
/// straddle them.
template <class F>
double integrate_1d(const F& f, double a, double b, double tol,
                    const std::vector<double>& knots = {}) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts = {a, b};
  for (double k : knots)
    if (k > a && k < b) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  const double per = tol / static_cast<double>(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double whole = gauss16(f, pts[i], pts[i + 1]);
    total += detail::adaptive_1d(f, pts[i], pts[i + 1], whole, per, 0);
  }
  return total;
}

/// Axis-aligned rectangle [xlo,xhi] x [ylo,yhi].
struct Rect {
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  double area() const { return (xhi - xlo) * (yhi - ylo); }
};

/// Tensor-product 16x16 Gauss rule over a rectangle.
template <class F>
double gauss16_rect(const F& f, const Rect& r) {
  const double cx = 0.5 * (r.xlo + r.xhi), hx = 0.5 * (r.xhi - r.xlo);
  const double cy = 0.5 * (r.ylo + r.yhi), hy = 0.5 * (r.yhi - r.ylo);
  std::array<double, 16> xs, ys, wx, wy;
  for (int i = 0; i < 8; ++i) {
    xs[i] = cx - Gauss16::abscissae[i] * hx;
    xs[15 - i] = cx + Gauss16::abscissae[i] * hx;
    ys[i] = cy - Gauss16::abscissae[i] * hy;
    ys[15 - i] = cy + Gauss16::abscissae[i] * hy;
    wx[i] = wx[15 - i] = Gauss16::weights[i] * hx;
    wy[i] = wy[15 - i] = Gauss16::weights[i] * hy;
  }
  double s = 0.0;
  for (int i = 0; i < 16; ++i) {
    double row = 0.0;
    for (int j = 0; j < 16; ++j) row += wy[j] * f(xs[i], ys[j]);
    s += wx[i] * row;
  }
  return s;
}

namespace detail {

template <class F>
double adaptive_rect(const F& f, const Rect& r, double whole, double tol,
                     int depth) {
  const double mx = 0.5 * (r.xlo + r.xhi), my = 0.5 * (r.ylo + r.yhi);
  const Rect q[4] = {{r.xlo, mx, r.ylo, my},
                     {mx, r.xhi, r.ylo, my},
                     {r.xlo, mx, my, r.yhi},
                     {mx, r.xhi, my, r.yhi}};
  double parts[4], sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    parts[i] = gauss16_rect(f, q[i]);
    sum += parts[i];
  }
  if (std::abs(sum - whole) <= tol || depth >= 24) return sum;
  double out = 0.0;
  for (int i = 0; i < 4; ++i)
    out += adaptive_rect(f, q[i], parts[i], 0.25 * tol, depth + 1);
  return out;
}

}  // namespace detail

/// Adaptive tensor-Gauss integration over a rectangle to absolute
/// tolerance `tol`.
template <class F>
double integrate_rect(const F& f, const Rect& r, double tol) {
  if (!(r.xhi > r.xlo) || !(r.yhi > r.ylo)) return 0.0;
  return detail::adaptive_rect(f, r, gauss16_rect(f, r), tol, 0);
}

/// Finds x in [lo,hi] with F(x) = target for a nondecreasing F, by bisection;
/// stops when |F(x) - target| <= mass_tol or the bracket is at rounding width.
template <class F>
double invert_monotone(const F& cumulative, double lo, double hi, double target,
                       double mass_tol) {
  double flo = cumulative(lo) - target;
  double fhi = cumulative(hi) - target;
  if (flo > mass_tol || fhi < -mass_tol)
    throw DegenerateDensityError("cumulative mass does not bracket the target");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = cumulative(mid) - target;
    if (std::abs(fm) <= mass_tol) return mid;
    (fm < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Bisection on a cumulative defined by strip integrals: finds m in [lo,hi]
/// with ∫_{lo}^{m} = target, re-integrating only the bracket increment at
/// each step. `strip(a, b)` integrates over [a, b]; `total`, when
/// nonnegative, is a known value of strip(lo, hi) and skips the bracketing
/// probe. The accumulated mass error stays within a few strip tolerances.
template <class Strip>
double invert_cumulative(const Strip& strip, double lo, double hi,
                         double target, double mass_tol, double total = -1.0) {
  if (total < 0.0) total = strip(lo, hi);
  if (target < -mass_tol || total - target < -mass_tol)
    throw DegenerateDensityError("cumulative mass does not bracket the target");
  double base = 0.0;  // cumulative at the moving lower bracket
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = base + strip(lo, mid) - target;
    if (std::abs(fm) <= mass_tol) return mid;
    if (fm < 0) {
      base = fm + target;
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace mmot::quad
