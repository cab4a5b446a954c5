#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mmot/density.hpp"
#include "oracles.hpp"

using namespace mmot;

TEST_CASE("builtin densities integrate to their particle count") {
  for (const char* name : {"system1", "system2", "system3", "system4",
                           "system5", "system6"}) {
    const DensitySpec spec = DensitySpec::builtin(name);
    const double total = oracles::adaptive_simpson(
        [&](double x) { return spec(x); }, spec.lo(), spec.hi(), 1e-12);
    CHECK_THAT(total, Catch::Matchers::WithinAbs(spec.particles(), 1e-8));
  }
}

TEST_CASE("2D builtins integrate to their particle count") {
  for (const char* name : {"system7", "system8"}) {
    const DensitySpec spec = DensitySpec::builtin(name);
    const double total = oracles::simpson_2d(
        [&](double x, double y) { return spec(x, y); }, spec.box(), 400);
    CHECK_THAT(total, Catch::Matchers::WithinAbs(spec.particles(), 1e-6));
  }
}

TEST_CASE("densities are nonnegative on samples") {
  const DensitySpec s2 = DensitySpec::builtin("system2");
  for (int i = 0; i <= 100; ++i) {
    const double x = s2.lo() + (s2.hi() - s2.lo()) * i / 100.0;
    CHECK(s2(x) >= 0.0);
  }
}

TEST_CASE("builtin normalization constants match closed forms") {
  // system1: raw integral of cos(pi x) + 1 over [-1,1] is 2, so the density
  // is 1.5 (cos(pi x) + 1).
  const DensitySpec s1 = DensitySpec::builtin("system1");
  CHECK(s1(0.0) == Catch::Approx(3.0).epsilon(1e-10));
  // system3: raw integral of e^{-|x|} over [-5,5] is 2(1 - e^{-5}).
  const DensitySpec s3 = DensitySpec::builtin("system3");
  const double c3 = 3.0 / (2.0 * (1.0 - std::exp(-5.0)));
  CHECK(s3(0.0) == Catch::Approx(c3).epsilon(1e-10));
  CHECK(s3(1.0) == Catch::Approx(c3 * std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("degenerate densities are rejected") {
  CHECK_THROWS_AS(
      DensitySpec::make_1d("zero", [](double) { return 0.0; }, 0, 1, 3),
      DegenerateDensityError);
}

TEST_CASE("custom gaussian mixtures normalize like builtins") {
  const DensitySpec g = gaussian_mixture_1d(
      "custom", {{{2.0, -0.5, 6.0}}, {{1.5, 0.5, 4.0}}}, -1, 1, 3);
  const DensitySpec s2 = DensitySpec::builtin("system2");
  for (double x : {-0.9, -0.3, 0.0, 0.4, 0.8})
    CHECK(g(x) == Catch::Approx(s2(x)).epsilon(1e-12));
}
