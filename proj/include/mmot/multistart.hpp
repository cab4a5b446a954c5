#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "mmot/pbcd.hpp"

namespace mmot {

struct MultistartConfig {
  int n_starts = 200;
  std::uint64_t seed = 0;
  PbcdConfig pbcd;
  int keep_top = 1;
  int threads = 1;
};

struct StartSummary {
  int index = 0;
  double f = 0.0;
  double f_beta = 0.0;
  double comp = 0.0;
  double feas = 0.0;
  long sweeps = 0;
  Termination reason = Termination::SweepBudget;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct MultistartResult {
  PlanSet best;
  int best_index = -1;
  std::vector<StartSummary> summaries;
  std::vector<std::pair<StartSummary, PlanSet>> top;  // keep_top best plans
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform double in [0,1) from the top 53 bits; bit-identical everywhere.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Deterministic per-start generator, split from the master seed.
inline std::mt19937_64 start_rng(std::uint64_t master_seed, int start_index) {
  return std::mt19937_64(
      detail::splitmix64(master_seed ^ detail::splitmix64(start_index + 1)));
}

/// Draws a feasible start: i.i.d. uniform [0,1) entries per block, zero
/// diagonal, then projection onto S.
inline PlanSet random_feasible_start(const ProblemData& p, std::mt19937_64& rng,
                                     double eps_inner = 1e-9) {
  PlanSet Z = PlanSet::zero(p.N - 1, p.K);
  ProjectionOptions opts;
  opts.eps_inner = eps_inner;
  for (auto& X : Z.blocks) {
    for (int k = 0; k < p.K; ++k)
      for (int j = 0; j < p.K; ++j) X(j, k) = detail::uniform01(rng);
    X.diagonal().setZero();
    X = project_onto_S(X, p, opts).W;
  }
  return Z;
}

/// Polishes n_starts independent random feasible starts with PBCD and keeps
/// the smallest penalized energy; ties break by smaller complementarity
/// violation, then by start index, so parallel and serial runs agree.
inline MultistartResult multistart_solve(const ProblemData& p,
                                         const MultistartConfig& cfg) {
  if (cfg.n_starts < 1) throw Error("multistart requires n_starts >= 1");
  const int n = cfg.n_starts;
  std::vector<StartSummary> sums(n);
  std::vector<std::optional<PlanSet>> plans(n);

  const auto run_one = [&](int idx) {
    StartSummary s;
    s.index = idx;
    try {
      auto rng = start_rng(cfg.seed, idx);
      PlanSet Z0 = random_feasible_start(p, rng, cfg.pbcd.eps_inner);
      auto [Z, rep] = pbcd_solve(p, std::move(Z0), cfg.pbcd);
      s.f = rep.final_energy;
      s.f_beta = rep.final_penalized_energy;
      s.comp = comp_violation(Z);
      s.feas = rep.final_feasibility;
      s.sweeps = rep.sweeps;
      s.reason = rep.reason;
      s.wall_seconds = rep.wall_seconds;
      plans[idx] = std::move(Z);
    } catch (const Error& e) {
      s.failed = true;
      s.error = e.what();
    }
    sums[idx] = std::move(s);
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, n); ++t)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  const auto better = [&](int a, int b) {
    if (sums[a].failed != sums[b].failed) return !sums[a].failed;
    if (sums[a].f_beta != sums[b].f_beta) return sums[a].f_beta < sums[b].f_beta;
    if (sums[a].comp != sums[b].comp) return sums[a].comp < sums[b].comp;
    return a < b;
  };
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), better);

  if (sums[order[0]].failed) {
    std::string msg = "all multistart attempts failed; first error: " +
                      sums[order[0]].error;
    throw Error(msg);
  }

  MultistartResult res;
  res.best_index = order[0];
  res.best = *plans[order[0]];
  res.summaries = sums;
  const int keep = std::max(1, cfg.keep_top);
  for (int r = 0; r < std::min(keep, n); ++r) {
    const int idx = order[r];
    if (sums[idx].failed) break;
    res.top.emplace_back(sums[idx], *plans[idx]);
  }
  return res;
}

}  // namespace mmot
