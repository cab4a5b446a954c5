#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "mmot/assembly.hpp"
#include "mmot/projection.hpp"

namespace mmot {

struct PbcdConfig {
  double sigma = 1e-3;
  double eps_outer = 1e-8;
  long max_sweeps = 1000000;
  double energy_stall_tol = 1e-8;
  double eps_inner = 1e-9;
  long max_newton = 100000;
  int trace_every = 1;
};

enum class Termination { IterateGap, EnergyStall, SweepBudget };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::IterateGap: return "iterate_gap";
    case Termination::EnergyStall: return "energy_stall";
    default: return "sweep_budget";
  }
}

/// Per-sweep traces and the exit summary of one local solve.
struct SolveReport {
  std::vector<double> energies;            // f
  std::vector<double> penalized_energies;  // f_beta
  std::vector<double> comp_violations;
  std::vector<double> feasibilities;
  std::vector<double> kkt_violations;
  std::vector<double> iterate_gaps;  // sqrt(sigma) ||Z_k - Z_{k-1}||_F
  std::vector<double> sweep_seconds;
  long sweeps = 0;
  Termination reason = Termination::SweepBudget;
  double wall_seconds = 0.0;
  double final_energy = 0.0;
  double final_penalized_energy = 0.0;
  double final_feasibility = 0.0;
  double final_kkt_violation = 0.0;
};

/// Surrogate stationarity measure between two consecutive sweeps:
/// sum_i || sum_{j>i} [Xi Lambda (X_j^- - X_j) Xi C Xi + beta (X_j^- - X_j)]
///          + sigma (X_i - X_i^-) ||_F.
inline double kkt_violation(const PlanSet& Z_prev, const PlanSet& Z_curr,
                            const ProblemData& p, double sigma) {
  const int nb = Z_curr.block_count();
  double total = 0.0;
  MatrixXd tail = MatrixXd::Zero(p.K, p.K);  // sum_{j>i} (X_j^- - X_j)
  std::vector<double> norms(nb);
  for (int i = nb - 1; i >= 0; --i) {
    MatrixXd term = p.d1.asDiagonal() * tail * p.M2;
    term += p.beta * tail;
    term += sigma * (Z_curr.blocks[i] - Z_prev.blocks[i]);
    norms[i] = term.norm();
    tail += Z_prev.blocks[i] - Z_curr.blocks[i];
  }
  for (double n : norms) total += n;
  return total;
}

/// Feas(Z) = sum_i ||B(X_i) - b||_2.
inline double feasibility(const PlanSet& Z, const ProblemData& p) {
  double s = 0.0;
  for (const auto& X : Z.blocks) s += (apply_B(X, p) - p.b).norm();
  return s;
}

/// One Gauss-Seidel sweep: for i = 2..N, project X_i - G_i / sigma onto S
/// with the block's warm-started dual. Blocks below i enter G_i at their
/// updated values, blocks above at the previous sweep's values. Each block
/// update solves its proximal subproblem exactly up to eps_inner, because
/// the block objective is linear and the prox turns it into a projection.
inline void pbcd_sweep(PlanSet& Z, const ProblemData& p, const PbcdConfig& cfg,
                       std::vector<DualState>& duals,
                       ProjectionStats* stats_accum = nullptr) {
  const int nb = Z.block_count();
  if (static_cast<int>(duals.size()) != nb) duals.resize(nb);
  ProjectionOptions popts{cfg.eps_inner, cfg.max_newton};
  for (int i = 0; i < nb; ++i) {
    MatrixXd G = block_gradient(Z, i + 2, p);
    MatrixXd Y = Z.blocks[i] - G / cfg.sigma;
    const DualState* warm = duals[i].lambda.size() ? &duals[i] : nullptr;
    ProjectionResult r;
    try {
      r = project_onto_S(Y, p, popts, warm);
    } catch (const ProjectionError& e) {
      throw ProjectionError(
          "block " + std::to_string(i + 2) + " projection failed: " + e.what(),
          e.final_residual, e.iters);
    }
    Z.blocks[i] = std::move(r.W);
    duals[i] = std::move(r.dual);
    if (stats_accum) {
      stats_accum->newton_iters += r.stats.newton_iters;
      stats_accum->cg_iters += r.stats.cg_iters;
    }
  }
}

/// Cyclic proximal block coordinate descent from Z0 (projected on the first
/// sweep if infeasible). Stops at the first of: scaled iterate gap
/// sqrt(sigma)||Z_{k+1}-Z_k||_F < eps_outer, energy stall
/// |f_beta(Z_{k+1}) - f_beta(Z_k)| < energy_stall_tol, or the sweep budget.
inline std::pair<PlanSet, SolveReport> pbcd_solve(const ProblemData& p,
                                                  PlanSet Z,
                                                  const PbcdConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  SolveReport rep;
  std::vector<DualState> duals;
  double f_beta_prev = penalized_energy(Z, p);
  PlanSet Z_prev = Z;

  for (long sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const auto ts = clock::now();
    Z_prev = Z;
    pbcd_sweep(Z, p, cfg, duals);
    rep.sweeps = sweep;

    const double gap = std::sqrt(cfg.sigma) * Z.distance(Z_prev);
    const double f = energy(Z, p);
    const double comp = comp_violation(Z);
    const double f_beta = f + p.beta * comp;

    if (cfg.trace_every > 0 && (sweep - 1) % cfg.trace_every == 0) {
      rep.energies.push_back(f);
      rep.penalized_energies.push_back(f_beta);
      rep.comp_violations.push_back(comp);
      rep.feasibilities.push_back(feasibility(Z, p));
      rep.kkt_violations.push_back(kkt_violation(Z_prev, Z, p, cfg.sigma));
      rep.iterate_gaps.push_back(gap);
      rep.sweep_seconds.push_back(
          std::chrono::duration<double>(clock::now() - ts).count());
    }

    if (gap < cfg.eps_outer) {
      rep.reason = Termination::IterateGap;
      break;
    }
    if (std::abs(f_beta - f_beta_prev) < cfg.energy_stall_tol) {
      rep.reason = Termination::EnergyStall;
      break;
    }
    rep.reason = Termination::SweepBudget;
    f_beta_prev = f_beta;
  }

  rep.final_energy = energy(Z, p);
  rep.final_penalized_energy = penalized_energy(Z, p);
  rep.final_feasibility = feasibility(Z, p);
  rep.final_kkt_violation = kkt_violation(Z_prev, Z, p, cfg.sigma);
  rep.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return {std::move(Z), std::move(rep)};
}

}  // namespace mmot
