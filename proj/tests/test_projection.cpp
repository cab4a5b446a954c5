#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "mmot/projection.hpp"
#include "oracles.hpp"

using namespace mmot;

namespace {

MatrixXd random_matrix(int K, std::mt19937_64& rng, double lo = -1,
                       double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  MatrixXd Y(K, K);
  for (int j = 0; j < K; ++j)
    for (int k = 0; k < K; ++k) Y(j, k) = u(rng);
  return Y;
}

}  // namespace

TEST_CASE("projection of a member of S returns it unchanged") {
  std::mt19937_64 rng(2);
  const ProblemData p = oracles::equal_mass_problem(2, 3, 1.0, rng);
  MatrixXd W0 = MatrixXd::Zero(2, 2);
  W0(0, 1) = 1.0 / p.vol(1);
  W0(1, 0) = 1.0 / p.vol(0);
  const auto res = project_onto_S(W0, p, {1e-11, 100000});
  CHECK((res.W - W0).norm() <= 1e-9);
  CHECK(res.stats.converged);
}

TEST_CASE("K=2 equal-mass S is a single point; any Y projects onto it") {
  std::mt19937_64 rng(4);
  const ProblemData p = oracles::equal_mass_problem(2, 3, 1.0, rng);
  MatrixXd target = MatrixXd::Zero(2, 2);
  target(0, 1) = 1.0 / p.vol(1);
  target(1, 0) = 1.0 / p.vol(0);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixXd Y = random_matrix(2, rng, -3, 3);
    const auto res = project_onto_S(Y, p, {1e-10, 100000});
    CHECK((res.W - target).norm() <= 1e-7);
  }
}

TEST_CASE("projection matches the active-set enumeration oracle at K=3") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const ProblemData p = oracles::equal_mass_problem(3, 3, 1.0, rng);
    const MatrixXd Y = random_matrix(3, rng);
    const auto res = project_onto_S(Y, p, {1e-11, 100000});
    const MatrixXd W_oracle = oracles::project_enumeration(Y, p);
    CHECK((res.W - W_oracle).norm() <= 1e-7);
    CHECK(res.W.minCoeff() >= 0.0);
    CHECK((apply_B(res.W, p) - p.b).norm() <= 1e-11);
  }
}

TEST_CASE("dual objective value and gradient") {
  std::mt19937_64 rng(8);
  const int K = 4;
  const ProblemData p = oracles::equal_mass_problem(K, 3, 1.0, rng);

  SECTION("clamp kills a nonpositive Y at lambda = 0") {
    const MatrixXd Y = -random_matrix(K, rng, 0.2, 1.0).cwiseAbs();
    const auto [theta, grad] = dual_objective(VectorXd::Zero(2 * K + 1), Y, p);
    CHECK_THAT(theta, Catch::Matchers::WithinRel(0.5 * Y.squaredNorm(), 1e-12));
    CHECK((grad - p.b).norm() == 0.0);
  }

  SECTION("gradient matches finite differences") {
    const MatrixXd Y = random_matrix(K, rng);
    VectorXd lambda(2 * K + 1);
    std::normal_distribution<double> g(0.0, 0.5);
    for (int i = 0; i < lambda.size(); ++i) lambda(i) = g(rng);
    const auto [theta, grad] = dual_objective(lambda, Y, p);
    (void)theta;
    const double h = 1e-6;
    for (int i = 0; i < lambda.size(); ++i) {
      VectorXd lp = lambda, lm = lambda;
      lp(i) += h;
      lm(i) -= h;
      const double fd =
          (dual_objective(lp, Y, p).first - dual_objective(lm, Y, p).first) /
          (2 * h);
      CHECK_THAT(fd, Catch::Matchers::WithinAbs(
                         grad(i), 1e-5 * (1 + std::abs(grad(i)))));
    }
  }

  SECTION("strong duality: theta at the optimum equals the primal value") {
    const ProblemData p3 = oracles::equal_mass_problem(3, 3, 1.0, rng);
    const MatrixXd Y = random_matrix(3, rng);
    const auto res = project_onto_S(Y, p3, {1e-12, 100000});
    const MatrixXd W_oracle = oracles::project_enumeration(Y, p3);
    const double primal = 0.5 * (W_oracle - Y).squaredNorm();
    const double theta = dual_objective(res.dual.lambda, Y, p3).first;
    CHECK_THAT(theta, Catch::Matchers::WithinAbs(primal, 1e-8 * (1 + primal)));
  }
}

TEST_CASE("newton system solve") {
  std::mt19937_64 rng(10);
  const int K = 2;
  const ProblemData p = oracles::equal_mass_problem(K, 3, 1.0, rng);

  SECTION("fully active mask agrees with a dense direct solve") {
    DualState state;
    state.lambda = VectorXd::Zero(2 * K + 1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < state.lambda.size(); ++i)
      state.lambda(i) = 0.1 * g(rng);
    state.active = Eigen::ArrayXXd::Ones(K, K);
    const MatrixXd Y = random_matrix(K, rng, 0.5, 1.5);
    const VectorXd grad = dual_objective(state.lambda, Y, p).second;

    const int n = 2 * K + 1;
    MatrixXd V(n, n);
    for (int i = 0; i < n; ++i)
      V.col(i) = detail::apply_V(VectorXd::Unit(n, i), state.active, p);
    const double eps = std::max(1e-12, 1e-4 * grad.norm());
    const VectorXd nu = detail::null_direction(p);
    VectorXd rhs = grad;
    detail::deflate(rhs, nu);
    const VectorXd dense =
        (V + eps * MatrixXd::Identity(n, n)).ldlt().solve(rhs);

    const VectorXd d = newton_system_solve(state, Y, p, 1e-12);
    CHECK((d - dense).norm() <= 1e-8 * (1.0 + dense.norm()));
  }

  SECTION("empty active mask returns the regularized gradient direction") {
    DualState state;
    state.lambda = VectorXd::Zero(2 * K + 1);
    state.active = Eigen::ArrayXXd::Zero(K, K);
    const MatrixXd Y = -random_matrix(K, rng, 0.5, 1.5).cwiseAbs();
    const VectorXd grad = dual_objective(state.lambda, Y, p).second;
    const double eps = std::max(1e-12, 1e-4 * grad.norm());
    const VectorXd nu = detail::null_direction(p);
    VectorXd expected = grad;
    detail::deflate(expected, nu);
    expected /= eps;
    const VectorXd d = newton_system_solve(state, Y, p, 1e-10);
    CHECK((d - expected).norm() <= 1e-6 * expected.norm());
  }

  SECTION("V is positive semidefinite") {
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::ArrayXXd active(K, K);
      for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) active(j, k) = (rng() % 2) ? 1.0 : 0.0;
      VectorXd u(2 * K + 1);
      for (int i = 0; i < u.size(); ++i) u(i) = g(rng);
      CHECK(u.dot(detail::apply_V(u, active, p)) >= -1e-12);
    }
  }
}

TEST_CASE("projection results are idempotent and warm starts are instant") {
  std::mt19937_64 rng(12);
  const ProblemData p = oracles::equal_mass_problem(4, 3, 1.0, rng);
  const MatrixXd Y = random_matrix(4, rng, -2, 2);
  const auto res = project_onto_S(Y, p, {1e-10, 100000});
  REQUIRE(res.stats.converged);

  SECTION("idempotence") {
    const auto res2 = project_onto_S(res.W, p, {1e-10, 100000});
    CHECK((res2.W - res.W).norm() <= 2e-10 * (1.0 + res.W.norm()));
    CHECK((apply_B(res2.W, p) - p.b).norm() <= 2e-10);
  }

  SECTION("warm start converges in <= 2 Newton iterations") {
    const auto res2 = project_onto_S(Y, p, {1e-10, 100000}, &res.dual);
    CHECK(res2.stats.newton_iters <= 2);
    CHECK((res2.W - res.W).norm() <= 1e-9);
  }
}

TEST_CASE("dual objective does not decrease over a solve") {
  std::mt19937_64 rng(14);
  const ProblemData p = oracles::equal_mass_problem(5, 3, 1.0, rng);
  const MatrixXd Y = random_matrix(5, rng, -2, 2);
  const double theta0 = dual_objective(VectorXd::Zero(11), Y, p).first;
  const auto res = project_onto_S(Y, p, {1e-10, 100000});
  const double theta_final = dual_objective(res.dual.lambda, Y, p).first;
  CHECK(theta_final >= theta0 - 1e-12 * (1.0 + std::abs(theta0)));
}

TEST_CASE("infeasible S is detected") {
  // K = 1: Tr W = 0 while We = 1 is contradictory.
  ProblemData p;
  p.N = 3;
  p.beta = 1.0;
  p.vol = VectorXd::Ones(1);
  p.varrho = VectorXd::Ones(1) * 3.0;
  p.C = MatrixXd::Zero(1, 1);
  p.finalize();
  MatrixXd Y = MatrixXd::Zero(1, 1);
  CHECK_THROWS_AS(project_onto_S(Y, p, {1e-9, 1000000}), ProjectionError);
}
