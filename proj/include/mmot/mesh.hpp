#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mmot/density.hpp"
#include "mmot/errors.hpp"
#include "mmot/quadrature.hpp"

namespace mmot {

/// One volume-carrying element. 1D elements use bounds {lo, hi, 0, 0} and
/// barycenter {mid, 0}; 2D elements use bounds {xlo, xhi, ylo, yhi}.
struct Element {
  std::array<double, 4> bounds{0, 0, 0, 0};
  double volume = 0.0;
  std::array<double, 2> barycenter{0, 0};
  int parent = -1;

  static Element interval(double lo, double hi, int parent = -1) {
    Element e;
    e.bounds = {lo, hi, 0, 0};
    e.volume = hi - lo;
    e.barycenter = {0.5 * (lo + hi), 0};
    e.parent = parent;
    return e;
  }
  static Element rect(const quad::Rect& r, int parent = -1) {
    Element e;
    e.bounds = {r.xlo, r.xhi, r.ylo, r.yhi};
    e.volume = r.area();
    e.barycenter = {0.5 * (r.xlo + r.xhi), 0.5 * (r.ylo + r.yhi)};
    e.parent = parent;
    return e;
  }
  quad::Rect as_rect() const { return {bounds[0], bounds[1], bounds[2], bounds[3]}; }
  double lo() const { return bounds[0]; }
  double hi() const { return bounds[1]; }
};

/// A partition of the domain into elements. Elements are ordered
/// left-to-right in 1D and in construction (DFS) order in 2D.
struct Mesh {
  int dim = 1;
  int level = 0;
  std::vector<Element> elements;

  int size() const { return static_cast<int>(elements.size()); }
  double total_volume() const {
    double s = 0;
    for (const auto& e : elements) s += e.volume;
    return s;
  }
};

/// For each coarse element index j, the ordered fine indices of its children.
struct RefinementMap {
  std::vector<std::vector<int>> children;
  int fine_count = 0;
};

namespace detail {

inline double mass_tol_for(const DensitySpec& spec) {
  (void)spec;
  return 1e-12;
}

}  // namespace detail

/// Partitions [a,b] into K contiguous intervals each carrying marginal mass
/// N/K. Breakpoints invert the cumulative integral by bracketed bisection;
/// the mass of every element is exact to 1e-12 absolute.
inline Mesh partition_equal_mass_1d(const DensitySpec& spec, int K) {
  if (spec.dimension() != 1)
    throw Error("partition_equal_mass_1d requires a 1D density");
  if (K < 2) throw Error("partition_equal_mass_1d requires K >= 2");
  const double a = spec.lo(), b = spec.hi();
  const double target = static_cast<double>(spec.particles()) / K;
  const double tol = detail::mass_tol_for(spec);

  Mesh mesh;
  mesh.dim = 1;
  mesh.elements.reserve(K);
  const auto strip = [&](double s, double t) {
    return spec.mass_1d(s, t, 0.02 * tol);
  };
  double left = a;
  for (int j = 0; j < K - 1; ++j) {
    const double remaining = (K - j) * target;
    const double right =
        quad::invert_cumulative(strip, left, b, target, tol, remaining);
    if (!(right > left))
      throw DegenerateDensityError(
          "vanishing density prevents CDF inversion at breakpoint " +
          std::to_string(j + 1));
    mesh.elements.push_back(Element::interval(left, right));
    left = right;
  }
  if (!(b > left))
    throw DegenerateDensityError("vanishing density near the right boundary");
  mesh.elements.push_back(Element::interval(left, b));
  return mesh;
}

namespace detail {

/// Splits a rectangle into four equal-mass children: first at the x mass
/// median, then each half at its own y mass median. Children are emitted in
/// a fixed order (left-bottom, left-top, right-bottom, right-top).
inline std::array<quad::Rect, 4> equal_mass_quarters(const DensitySpec& spec,
                                                     const quad::Rect& r,
                                                     double cell_mass,
                                                     double tol) {
  const double strip_tol = 0.02 * tol;
  const auto xstrip = [&](double s, double t) {
    return spec.mass_2d({s, t, r.ylo, r.yhi}, strip_tol);
  };
  const double mx = quad::invert_cumulative(xstrip, r.xlo, r.xhi,
                                            0.5 * cell_mass, tol, cell_mass);
  const quad::Rect left{r.xlo, mx, r.ylo, r.yhi};
  const quad::Rect right{mx, r.xhi, r.ylo, r.yhi};
  const auto ystrip_l = [&](double s, double t) {
    return spec.mass_2d({left.xlo, left.xhi, s, t}, strip_tol);
  };
  const auto ystrip_r = [&](double s, double t) {
    return spec.mass_2d({right.xlo, right.xhi, s, t}, strip_tol);
  };
  const double myl = quad::invert_cumulative(
      ystrip_l, r.ylo, r.yhi, 0.25 * cell_mass, tol, 0.5 * cell_mass);
  const double myr = quad::invert_cumulative(
      ystrip_r, r.ylo, r.yhi, 0.25 * cell_mass, tol, 0.5 * cell_mass);
  return {quad::Rect{left.xlo, left.xhi, r.ylo, myl},
          quad::Rect{left.xlo, left.xhi, myl, r.yhi},
          quad::Rect{right.xlo, right.xhi, r.ylo, myr},
          quad::Rect{right.xlo, right.xhi, myr, r.yhi}};
}

inline void quadtree_build(const DensitySpec& spec, const quad::Rect& cell,
                           double cell_mass, double threshold, double tol,
                           std::vector<Element>& out) {
  if (cell_mass <= threshold) {
    out.push_back(Element::rect(cell));
    return;
  }
  if (!(cell.xhi - cell.xlo > 1e-12) || !(cell.yhi - cell.ylo > 1e-12))
    throw DegenerateDensityError("quadtree split reached a degenerate cell");
  const auto q = equal_mass_quarters(spec, cell, cell_mass, tol);
  for (const auto& c : q)
    quadtree_build(spec, c, 0.25 * cell_mass, threshold, tol, out);
}

}  // namespace detail

/// Equal-mass quadtree over the bounding box: every cell whose mass exceeds
/// N/K_target splits into four equal-mass rectangles until all leaves are at
/// or below that mass. Leaf count is 4^ceil(log4 K_target), within a factor 4
/// of K_target, and leaf masses agree up to split tolerance.
inline Mesh build_quadtree_mesh_2d(const DensitySpec& spec, int K_target) {
  if (spec.dimension() != 2)
    throw Error("build_quadtree_mesh_2d requires a 2D density");
  if (K_target < 4) throw Error("build_quadtree_mesh_2d requires K_target >= 4");
  const double N = spec.particles();
  const double threshold = N / K_target;
  const double tol = detail::mass_tol_for(spec);
  Mesh mesh;
  mesh.dim = 2;
  detail::quadtree_build(spec, spec.box(), N, threshold, tol, mesh.elements);
  return mesh;
}

/// Builds the initial mesh for a density of either dimension.
inline Mesh build_initial_mesh(const DensitySpec& spec, int K0) {
  return spec.dimension() == 1 ? partition_equal_mass_1d(spec, K0)
                               : build_quadtree_mesh_2d(spec, K0);
}

/// Refines every element: 1D intervals split at their equal-mass midpoint
/// into two children; 2D cells split into four equal-area quadrants. The
/// returned map embeds the coarse mesh into the fine one (children of j are
/// {2j, 2j+1} resp. {4j,..,4j+3}, 0-based).
inline std::pair<Mesh, RefinementMap> refine(const Mesh& mesh,
                                             const DensitySpec& spec) {
  Mesh fine;
  fine.dim = mesh.dim;
  fine.level = mesh.level + 1;
  RefinementMap map;
  map.children.resize(mesh.elements.size());
  const double tol = detail::mass_tol_for(spec);

  if (mesh.dim == 1) {
    fine.elements.reserve(2 * mesh.elements.size());
    const auto strip = [&](double s, double t) {
      return spec.mass_1d(s, t, 0.02 * tol);
    };
    for (int j = 0; j < mesh.size(); ++j) {
      const Element& e = mesh.elements[j];
      const double full = spec.mass_1d(e.lo(), e.hi(), 0.02 * tol);
      const double mid = quad::invert_cumulative(strip, e.lo(), e.hi(),
                                                 0.5 * full, tol, full);
      const int base = static_cast<int>(fine.elements.size());
      fine.elements.push_back(Element::interval(e.lo(), mid, j));
      fine.elements.push_back(Element::interval(mid, e.hi(), j));
      map.children[j] = {base, base + 1};
    }
  } else {
    fine.elements.reserve(4 * mesh.elements.size());
    for (int j = 0; j < mesh.size(); ++j) {
      const quad::Rect r = mesh.elements[j].as_rect();
      const double mx = 0.5 * (r.xlo + r.xhi), my = 0.5 * (r.ylo + r.yhi);
      const quad::Rect q[4] = {{r.xlo, mx, r.ylo, my},
                               {r.xlo, mx, my, r.yhi},
                               {mx, r.xhi, r.ylo, my},
                               {mx, r.xhi, my, r.yhi}};
      const int base = static_cast<int>(fine.elements.size());
      map.children[j] = {base, base + 1, base + 2, base + 3};
      for (const auto& c : q) fine.elements.push_back(Element::rect(c, j));
    }
  }
  map.fine_count = fine.size();
  return {std::move(fine), std::move(map)};
}

}  // namespace mmot
