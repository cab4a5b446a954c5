#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmot/diagnostics.hpp"
#include "mmot/grinit.hpp"
#include "mmot/multistart.hpp"

namespace mmot {

/// Penalty weight by grid size.
inline double beta_for(int K) {
  if (K < 10) return 4.0;
  if (K < 36) return 2.0;
  if (K < 80) return 1.0;
  if (K < 160) return 0.25;
  if (K < 320) return 0.125;
  if (K < 640) return 0.0625;
  if (K < 1280) return 0.03125;
  if (K < 2560) return 0.015625;
  if (K < 5120) return 0.0078125;
  return 0.00390625;
}

/// Outer stopping tolerance by grid size.
inline double eps_outer_for(int K) {
  if (K <= 200) return 1e-8;
  if (K <= 2000) return 1e-6;
  if (K <= 10000) return 1e-5;
  return 1e-4;
}

struct LevelOverride {
  std::optional<double> beta;
  std::optional<double> eps_outer;
  std::optional<double> sigma;
};

struct GgrConfig {
  int K0 = 12;
  int levels = 0;
  MultistartConfig multistart;
  double gr_scale = 1.0;
  double support_threshold = 1e-8;
  std::map<int, LevelOverride> overrides;
  bool compute_err = true;  // 1D only
  int assembly_threads = 1;
};

struct LevelResult {
  int level = 0;
  int K = 0;
  double beta = 0.0;
  double eps_outer = 0.0;
  double energy = 0.0;
  double penalized_energy = 0.0;
  double comp = 0.0;
  double feas = 0.0;
  double kkt = 0.0;
  std::optional<double> err_s;
  std::optional<double> err_e;
  long sweeps = 0;
  std::string termination;
  double wall_seconds = 0.0;
  int multistart_n = 0;         // level 0 only
  int multistart_winner = -1;   // level 0 only
  SolveReport report;
};

struct GgrResult {
  bool ok = false;
  std::string error;
  PlanSet plan;
  std::vector<LevelResult> levels;
  std::vector<Mesh> meshes;
};

/// State injected when resuming: the already-solved level, its mesh, and its
/// plan; ggr_run continues at `level + 1`.
struct GgrResume {
  int level = 0;
  Mesh mesh;
  PlanSet plan;
};

using LevelCallback =
    std::function<void(const LevelResult&, const Mesh&, const PlanSet&)>;

namespace detail {

inline PbcdConfig level_pbcd_config(const GgrConfig& cfg, int level, int K) {
  PbcdConfig pc = cfg.multistart.pbcd;
  pc.eps_outer = eps_outer_for(K);
  const auto it = cfg.overrides.find(level);
  if (it != cfg.overrides.end()) {
    if (it->second.eps_outer) pc.eps_outer = *it->second.eps_outer;
    if (it->second.sigma) pc.sigma = *it->second.sigma;
  }
  return pc;
}

inline double level_beta(const GgrConfig& cfg, int level, int K) {
  const auto it = cfg.overrides.find(level);
  if (it != cfg.overrides.end() && it->second.beta) return *it->second.beta;
  return beta_for(K);
}

inline void fill_diagnostics(LevelResult& lr, const PlanSet& Z,
                             const ProblemData& pdata) {
  lr.energy = energy(Z, pdata);
  lr.comp = comp_violation(Z);
  lr.penalized_energy = lr.energy + pdata.beta * lr.comp;
  lr.feas = feasibility(Z, pdata);
  lr.kkt = kkt_certificate(Z, pdata).overall;
}

}  // namespace detail

/// The full pipeline: multistart on the coarse mesh, then per level
/// refine -> reassemble with the size-scheduled beta and tolerance ->
/// support-lift the previous plan -> PBCD. Every level's plan is handed to
/// `on_level` (for checkpointing) and retained in the result.
inline GgrResult ggr_run(const DensitySpec& spec, const GgrConfig& cfg,
                         const LevelCallback& on_level = {},
                         const GgrResume* resume = nullptr) {
  using clock = std::chrono::steady_clock;
  GgrResult out;
  const SeidlMaps1d* oracle = nullptr;
  std::optional<SeidlMaps1d> oracle_store;
  if (spec.dimension() == 1 && cfg.compute_err) {
    oracle_store.emplace(spec);
    oracle = &*oracle_store;
  }

  Mesh mesh;
  PlanSet Z;
  int start_level = 0;
  try {
    if (resume) {
      mesh = resume->mesh;
      Z = resume->plan;
      start_level = resume->level + 1;
    } else {
      const auto t0 = clock::now();
      mesh = build_initial_mesh(spec, cfg.K0);
      const int K = mesh.size();
      LevelResult lr;
      lr.level = 0;
      lr.K = K;
      lr.beta = detail::level_beta(cfg, 0, K);
      MultistartConfig ms = cfg.multistart;
      ms.pbcd = detail::level_pbcd_config(cfg, 0, K);
      ms.pbcd.trace_every = 0;  // per-start traces are summaries only
      lr.eps_outer = ms.pbcd.eps_outer;
      ProblemData pdata = assemble(mesh, spec, lr.beta, cfg.assembly_threads);
      MultistartResult msr = multistart_solve(pdata, ms);
      Z = std::move(msr.best);
      lr.multistart_n = ms.n_starts;
      lr.multistart_winner = msr.best_index;
      detail::fill_diagnostics(lr, Z, pdata);
      const auto& win = msr.summaries[msr.best_index];
      lr.sweeps = win.sweeps;
      lr.termination = to_string(win.reason);
      if (oracle) {
        const MapTable maps = transport_maps(Z, mesh);
        lr.err_e = avg_error(maps, *oracle, mesh, spec.domain_measure()).err;
      }
      lr.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
      out.levels.push_back(lr);
      out.meshes.push_back(mesh);
      if (on_level) on_level(out.levels.back(), mesh, Z);
      start_level = 1;
    }

    for (int level = start_level; level <= cfg.levels; ++level) {
      const auto t0 = clock::now();
      auto [fine, rmap] = refine(mesh, spec);
      const int K = fine.size();
      LevelResult lr;
      lr.level = level;
      lr.K = K;
      lr.beta = detail::level_beta(cfg, level, K);
      const PbcdConfig pc = detail::level_pbcd_config(cfg, level, K);
      lr.eps_outer = pc.eps_outer;
      ProblemData pdata = assemble(fine, spec, lr.beta, cfg.assembly_threads);

      PlanSet Z0 = gr_init(Z, rmap, cfg.gr_scale, cfg.support_threshold);
      if (oracle) {
        const MapTable maps0 = transport_maps(Z0, fine);
        lr.err_s = avg_error(maps0, *oracle, fine, spec.domain_measure()).err;
      }

      auto [Zl, rep] = pbcd_solve(pdata, std::move(Z0), pc);
      Z = std::move(Zl);
      mesh = std::move(fine);
      detail::fill_diagnostics(lr, Z, pdata);
      lr.sweeps = rep.sweeps;
      lr.termination = to_string(rep.reason);
      lr.report = std::move(rep);
      if (oracle) {
        const MapTable maps = transport_maps(Z, mesh);
        lr.err_e = avg_error(maps, *oracle, mesh, spec.domain_measure()).err;
      }
      lr.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
      out.levels.push_back(std::move(lr));
      out.meshes.push_back(mesh);
      if (on_level) on_level(out.levels.back(), mesh, Z);
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.plan = std::move(Z);
  return out;
}

}  // namespace mmot
