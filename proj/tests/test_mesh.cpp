#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "mmot/mesh.hpp"
#include "oracles.hpp"

using namespace mmot;

namespace {

double oracle_mass_1d(const DensitySpec& spec, double a, double b) {
  return oracles::adaptive_simpson([&](double x) { return spec(x); }, a, b,
                                   1e-13);
}

double oracle_mass_2d(const DensitySpec& spec, const quad::Rect& r) {
  return oracles::simpson_2d([&](double x, double y) { return spec(x, y); }, r,
                             64);
}

const Element& leaf_containing(const Mesh& mesh, double x, double y) {
  for (const auto& e : mesh.elements)
    if (x >= e.bounds[0] && x <= e.bounds[1] && y >= e.bounds[2] &&
        y <= e.bounds[3])
      return e;
  FAIL("no leaf contains the point");
  return mesh.elements.front();
}

}  // namespace

TEST_CASE("uniform density partitions at even breakpoints") {
  const DensitySpec uni =
      DensitySpec::make_1d("uniform", [](double) { return 1.0; }, 0, 1, 3);
  const Mesh mesh = partition_equal_mass_1d(uni, 4);
  REQUIRE(mesh.size() == 4);
  CHECK_THAT(mesh.elements[0].hi(), Catch::Matchers::WithinAbs(0.25, 1e-10));
  CHECK_THAT(mesh.elements[1].hi(), Catch::Matchers::WithinAbs(0.50, 1e-10));
  CHECK_THAT(mesh.elements[2].hi(), Catch::Matchers::WithinAbs(0.75, 1e-10));
  for (const auto& e : mesh.elements)
    CHECK_THAT(e.volume, Catch::Matchers::WithinAbs(0.25, 1e-10));
}

TEST_CASE("system1 coarse mesh carries mass N/K per element") {
  const DensitySpec spec = DensitySpec::builtin("system1");
  const Mesh mesh = partition_equal_mass_1d(spec, 12);
  REQUIRE(mesh.size() == 12);
  for (const auto& e : mesh.elements)
    CHECK_THAT(oracle_mass_1d(spec, e.lo(), e.hi()),
               Catch::Matchers::WithinAbs(0.25, 1e-8));
  CHECK_THAT(mesh.total_volume(), Catch::Matchers::WithinRel(2.0, 1e-10));
}

TEST_CASE("system3 breakpoints invert the CDF despite the kink") {
  const DensitySpec spec = DensitySpec::builtin("system3");
  const Mesh mesh = partition_equal_mass_1d(spec, 12);
  REQUIRE(mesh.size() == 12);
  double cum = 0.0;
  for (int j = 0; j < 12; ++j) {
    const double m = oracle_mass_1d(spec, mesh.elements[j].lo(),
                                    mesh.elements[j].hi());
    CHECK_THAT(m, Catch::Matchers::WithinAbs(0.25, 1e-8));
    cum += m;
  }
  CHECK_THAT(cum, Catch::Matchers::WithinAbs(3.0, 1e-8));
  // Breakpoints must satisfy F(x_j) = j N/K for the independent CDF.
  for (int j = 0; j + 1 < 12; ++j) {
    const double F = oracle_mass_1d(spec, spec.lo(), mesh.elements[j].hi());
    CHECK_THAT(F, Catch::Matchers::WithinAbs(0.25 * (j + 1), 1e-8));
  }
}

TEST_CASE("equal-mass partition needs K >= 2 and positive mass") {
  const DensitySpec uni =
      DensitySpec::make_1d("uniform", [](double) { return 1.0; }, 0, 1, 3);
  CHECK_THROWS_AS(partition_equal_mass_1d(uni, 1), Error);
}

TEST_CASE("uniform square quadtree is the uniform 4x4 grid") {
  const DensitySpec uni = DensitySpec::make_2d(
      "uniform2", [](double, double) { return 1.0; }, 0, 1, 0, 1, 3);
  const Mesh mesh = build_quadtree_mesh_2d(uni, 16);
  REQUIRE(mesh.size() == 16);
  std::set<long> corners;
  for (const auto& e : mesh.elements) {
    CHECK_THAT(e.volume, Catch::Matchers::WithinAbs(1.0 / 16.0, 1e-9));
    corners.insert(std::lround(e.bounds[0] * 4) * 8 +
                   std::lround(e.bounds[2] * 4));
  }
  CHECK(corners.size() == 16);  // all 16 distinct grid cells
}

TEST_CASE("system7 quadtree leaves respect the mass cap") {
  const DensitySpec spec = DensitySpec::builtin("system7");
  const Mesh mesh = build_quadtree_mesh_2d(spec, 240);
  REQUIRE(mesh.size() == 256);  // 4^ceil(log4 240), within factor 4 of 240
  double min_mass = 1e300, max_mass = 0.0, total = 0.0, total_vol = 0.0;
  for (const auto& e : mesh.elements) {
    const double m = oracle_mass_2d(spec, e.as_rect());
    CHECK(m <= 3.0 / 240.0 + 1e-9);
    min_mass = std::min(min_mass, m);
    max_mass = std::max(max_mass, m);
    total += m;
    total_vol += e.volume;
  }
  CHECK(max_mass / min_mass <= 16.0);
  CHECK_THAT(total, Catch::Matchers::WithinAbs(3.0, 1e-6));
  CHECK_THAT(total_vol, Catch::Matchers::WithinRel(24.0, 1e-10));
}

TEST_CASE("mass concentration forces finer cells near a Gaussian center") {
  const DensitySpec g = DensitySpec::make_2d(
      "gauss", [](double x, double y) { return std::exp(-5 * (x * x + y * y)); },
      -1, 1, -1, 1, 3);
  const Mesh mesh = build_quadtree_mesh_2d(g, 64);
  const Element& center = leaf_containing(mesh, 0.01, 0.01);
  const Element& corner = leaf_containing(mesh, -0.99, -0.99);
  CHECK(center.volume < 0.25 * corner.volume);
}

TEST_CASE("1D refinement halves elements at the equal-mass midpoint") {
  const DensitySpec spec = DensitySpec::builtin("system1");
  Mesh mesh = partition_equal_mass_1d(spec, 12);
  const auto [fine, map] = refine(mesh, spec);
  REQUIRE(fine.size() == 24);
  for (int j = 0; j < 12; ++j) {
    REQUIRE(map.children[j].size() == 2);
    CHECK(map.children[j][0] == 2 * j);
    CHECK(map.children[j][1] == 2 * j + 1);
    const double vj = mesh.elements[j].volume;
    const double sum = fine.elements[2 * j].volume + fine.elements[2 * j + 1].volume;
    CHECK_THAT(sum, Catch::Matchers::WithinRel(vj, 1e-10));
    // Both children carry half of the parent's mass.
    CHECK_THAT(oracle_mass_1d(spec, fine.elements[2 * j].lo(),
                              fine.elements[2 * j].hi()),
               Catch::Matchers::WithinAbs(0.125, 1e-8));
    CHECK(fine.elements[2 * j].parent == j);
  }
}

TEST_CASE("2D refinement splits into four equal-area quadrants") {
  const DensitySpec spec = DensitySpec::builtin("system7");
  Mesh mesh = build_quadtree_mesh_2d(spec, 16);
  const auto [fine, map] = refine(mesh, spec);
  REQUIRE(fine.size() == 4 * mesh.size());
  for (int j = 0; j < mesh.size(); ++j) {
    REQUIRE(map.children[j].size() == 4);
    double sum = 0.0;
    for (int c : map.children[j]) {
      sum += fine.elements[c].volume;
      CHECK_THAT(fine.elements[c].volume,
                 Catch::Matchers::WithinRel(mesh.elements[j].volume / 4, 1e-12));
    }
    CHECK_THAT(sum, Catch::Matchers::WithinRel(mesh.elements[j].volume, 1e-10));
  }
}

TEST_CASE("refinement chain reproduces the K ladder 12-24-48-96-192") {
  const DensitySpec spec = DensitySpec::builtin("system1");
  Mesh mesh = partition_equal_mass_1d(spec, 12);
  std::vector<int> sizes{mesh.size()};
  for (int l = 0; l < 4; ++l) {
    auto [fine, map] = refine(mesh, spec);
    mesh = std::move(fine);
    sizes.push_back(mesh.size());
  }
  CHECK(sizes == std::vector<int>{12, 24, 48, 96, 192});
}

TEST_CASE("refinement maps are bijections onto fine indices") {
  const DensitySpec spec = DensitySpec::builtin("system2");
  Mesh mesh = partition_equal_mass_1d(spec, 7);
  const auto [fine, map] = refine(mesh, spec);
  std::set<int> seen;
  for (const auto& ch : map.children)
    for (int c : ch) {
      CHECK(seen.insert(c).second);
      CHECK(c >= 0);
      CHECK(c < map.fine_count);
    }
  CHECK(static_cast<int>(seen.size()) == map.fine_count);
  CHECK(map.fine_count == fine.size());
}
