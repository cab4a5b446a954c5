#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "mmot/multistart.hpp"
#include "mmot/pbcd.hpp"
#include "oracles.hpp"

using namespace mmot;

TEST_CASE("singleton S: one sweep lands on the fixed point") {
  std::mt19937_64 rng(3);
  const ProblemData p = oracles::equal_mass_problem(2, 3, 1.0, rng);
  MatrixXd point = MatrixXd::Zero(2, 2);
  point(0, 1) = 1.0 / p.vol(1);
  point(1, 0) = 1.0 / p.vol(0);

  PlanSet Z = oracles::random_plan(2, 2, rng);
  PbcdConfig cfg;
  std::vector<DualState> duals;
  pbcd_sweep(Z, p, cfg, duals);
  for (const auto& X : Z.blocks) CHECK((X - point).norm() <= 1e-6);

  PlanSet Z2 = Z;
  pbcd_sweep(Z2, p, cfg, duals);
  CHECK(Z2.distance(Z) <= 1e-8);
}

TEST_CASE("a sweep with exact projections does not increase f_beta") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const ProblemData p = oracles::equal_mass_problem(4, 3 + trial % 2, 1.0, rng);
    PbcdConfig cfg;
    cfg.eps_inner = 1e-12;
    auto rng2 = start_rng(trial, trial);
    PlanSet Z = random_feasible_start(p, rng2, 1e-12);
    const double before = penalized_energy(Z, p);
    std::vector<DualState> duals;
    pbcd_sweep(Z, p, cfg, duals);
    const double after = penalized_energy(Z, p);
    CHECK(after <= before + 1e-8);
  }
}

TEST_CASE("kkt violation functional") {
  std::mt19937_64 rng(7);
  const int K = 3;
  const ProblemData p = oracles::synthetic_problem(K, 3, 2.0, rng);

  SECTION("stationary pair gives zero") {
    const PlanSet Z = oracles::random_plan(2, K, rng);
    CHECK(kkt_violation(Z, Z, p, 1e-3) == 0.0);
  }

  SECTION("matches the hand-expanded N=3 formula") {
    const PlanSet Zp = oracles::random_plan(2, K, rng);
    const PlanSet Zc = oracles::random_plan(2, K, rng);
    const double sigma = 1e-3;
    // i = 2 term: j > 2 is only j = 3.
    const MatrixXd D3 = Zp.blocks[1] - Zc.blocks[1];
    MatrixXd term2 = p.d1.asDiagonal() * D3 * p.M2;
    term2 += p.beta * D3;
    term2 += sigma * (Zc.blocks[0] - Zp.blocks[0]);
    // i = 3 term: empty j-sum.
    const MatrixXd term3 = sigma * (Zc.blocks[1] - Zp.blocks[1]);
    const double expected = term2.norm() + term3.norm();
    CHECK_THAT(kkt_violation(Zp, Zc, p, sigma),
               Catch::Matchers::WithinRel(expected, 1e-12));
  }

  SECTION("scales linearly in sigma when only the prox term differs") {
    PlanSet Zp = oracles::random_plan(2, K, rng);
    PlanSet Zc = Zp;
    Zc.blocks[0] += MatrixXd::Constant(K, K, 0.1);  // X_3 identical
    const double v1 = kkt_violation(Zp, Zc, p, 1.0);
    const double v2 = kkt_violation(Zp, Zc, p, 2.0);
    CHECK_THAT(v2, Catch::Matchers::WithinRel(2.0 * v1, 1e-12));
  }
}

TEST_CASE("pbcd solve terminates with a recorded reason") {
  std::mt19937_64 rng(11);
  const ProblemData p = oracles::equal_mass_problem(6, 3, 1.0, rng);
  auto rng2 = start_rng(42, 0);
  PlanSet Z0 = random_feasible_start(p, rng2);
  PbcdConfig cfg;
  cfg.eps_outer = 1e-8;
  auto [Z, rep] = pbcd_solve(p, Z0, cfg);
  CHECK(rep.sweeps >= 1);
  CHECK((rep.reason == Termination::IterateGap ||
         rep.reason == Termination::EnergyStall));
  CHECK(feasibility(Z, p) <= 2 * cfg.eps_inner);
  // Energies are traced every sweep and never increase materially.
  for (std::size_t s = 1; s < rep.penalized_energies.size(); ++s)
    CHECK(rep.penalized_energies[s] <=
          rep.penalized_energies[s - 1] + 1e-8);

  SECTION("restart from the solution exits immediately") {
    auto [Z2, rep2] = pbcd_solve(p, Z, cfg);
    CHECK(rep2.sweeps <= 2);
    CHECK(Z2.distance(Z) <= 1e-6);
  }

  SECTION("iterate gap termination leaves the gap below eps_outer") {
    PbcdConfig strict = cfg;
    strict.energy_stall_tol = 0.0;  // force the iterate-gap rule
    strict.max_sweeps = 20000;
    auto [Z3, rep3] = pbcd_solve(p, Z0, strict);
    (void)Z3;
    if (rep3.reason == Termination::IterateGap)
      CHECK(rep3.iterate_gaps.back() < strict.eps_outer);
  }
}

TEST_CASE("sweep budget exhaustion is flagged and still returns the iterate") {
  std::mt19937_64 rng(13);
  const ProblemData p = oracles::equal_mass_problem(5, 3, 1.0, rng);
  auto rng2 = start_rng(7, 0);
  PlanSet Z0 = random_feasible_start(p, rng2);
  PbcdConfig cfg;
  cfg.max_sweeps = 1;
  cfg.energy_stall_tol = 0.0;
  cfg.eps_outer = 1e-16;
  auto [Z, rep] = pbcd_solve(p, Z0, cfg);
  CHECK(rep.reason == Termination::SweepBudget);
  CHECK(rep.sweeps == 1);
  CHECK(Z.K() == 5);
}

TEST_CASE("energy monotonicity across sweeps on random instances") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int K = 3 + static_cast<int>(rng() % 6);
    const int N = 3 + static_cast<int>(rng() % 2);
    const ProblemData p = oracles::equal_mass_problem(K, N, 1.0, rng);
    PbcdConfig cfg;
    cfg.eps_inner = 1e-11;
    cfg.max_sweeps = 40;
    cfg.energy_stall_tol = 0.0;
    cfg.eps_outer = 1e-10;
    auto rng2 = start_rng(100 + trial, trial);
    PlanSet Z = random_feasible_start(p, rng2, 1e-11);
    double prev = penalized_energy(Z, p);
    std::vector<DualState> duals;
    for (int sweep = 0; sweep < 12; ++sweep) {
      pbcd_sweep(Z, p, cfg, duals);
      const double cur = penalized_energy(Z, p);
      CHECK(cur <= prev + 1e-8);
      prev = cur;
    }
  }
}
