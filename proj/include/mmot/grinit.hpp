#pragma once

#include "mmot/assembly.hpp"
#include "mmot/errors.hpp"
#include "mmot/mesh.hpp"

namespace mmot {

/// Lifts a coarse plan onto the refined mesh: every coarse entry above
/// `support_threshold` spawns the full children(j) x children(k) block of
/// fine entries, each set to scale * x_{i,jk}; everything else is zero. The
/// result is generally infeasible; the first PBCD sweep projects it.
inline PlanSet gr_init(const PlanSet& Z_coarse, const RefinementMap& map,
                       double scale = 1.0, double support_threshold = 1e-8) {
  if (scale <= 0) throw Error("gr_init requires a positive scaling factor");
  const int Kc = Z_coarse.K();
  if (static_cast<int>(map.children.size()) != Kc)
    throw Error("refinement map size does not match the coarse plan");
  for (const auto& ch : map.children)
    for (int c : ch)
      if (c < 0 || c >= map.fine_count)
        throw Error("refinement map child index out of range");

  PlanSet Z_fine = PlanSet::zero(Z_coarse.block_count(), map.fine_count);
  for (int i = 0; i < Z_coarse.block_count(); ++i) {
    const MatrixXd& Xc = Z_coarse.blocks[i];
    MatrixXd& Xf = Z_fine.blocks[i];
    for (int j = 0; j < Kc; ++j)
      for (int k = 0; k < Kc; ++k) {
        const double x = Xc(j, k);
        if (x > support_threshold)
          for (int jt : map.children[j])
            for (int ku : map.children[k]) Xf(jt, ku) = scale * x;
      }
  }
  return Z_fine;
}

}  // namespace mmot
