#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "modlab/mesh.hpp"
#include "test_support.hpp"

using namespace modlab;

namespace {

int interior_face_count(const MeshDomain& dom) {
  int count = 0;
  for (std::int32_t f = 0; f < dom.face_count(); ++f)
    if (dom.face_interior(f)) ++count;
  return count;
}

}  // namespace

TEST_CASE("grid domain basic counts") {
  const auto dom = build_grid_domain(2, 2, 0.5);
  CHECK(dom.cell_count() == 4);
  CHECK(interior_face_count(dom) == 4);
  for (std::int32_t c = 0; c < dom.cell_count(); ++c)
    CHECK(dom.cell_measure(c) == doctest::Approx(0.25));
  for (std::int32_t f = 0; f < dom.face_count(); ++f)
    CHECK(dom.face_area(f) == doctest::Approx(0.5));

  const auto cube = build_grid_domain(3, 2, 1.0);
  CHECK(cube.cell_count() == 8);
  CHECK(interior_face_count(cube) == 12);
  for (std::int32_t c = 0; c < cube.cell_count(); ++c)
    CHECK(cube.cell_measure(c) == 1.0);
}

TEST_CASE("grid domain partitions the unit square exactly") {
  const auto dom = build_grid_domain(2, 64, 1.0 / 64);
  CHECK(dom.total_measure() == 1.0);
}

TEST_CASE("grid domain rejects bad parameters") {
  CHECK_THROWS_AS(build_grid_domain(4, 8, 0.125), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_domain(2, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_domain(2, 8, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid_domain(2, 8, -1.0), std::invalid_argument);
}

TEST_CASE("masked domain carves an annulus") {
  const auto base = build_grid_domain(2, 16, 1.0 / 16);
  const auto annulus = build_masked_domain(base, [](const std::array<double, 3>& c) {
    const double r = std::hypot(c[0] - 0.5, c[1] - 0.5);
    return r > 0.25 && r < 0.5;
  });
  CHECK(annulus.cell_count() > 0);
  CHECK(annulus.cell_count() < base.cell_count());

  // Faces against dropped cells become boundary faces.
  int boundary = 0;
  for (std::int32_t f = 0; f < annulus.face_count(); ++f)
    if (!annulus.face_interior(f)) ++boundary;
  CHECK(boundary > 0);
}

TEST_CASE("masked domain identity and failure cases") {
  const auto base = build_grid_domain(2, 4, 0.25);
  const auto same = build_masked_domain(base, [](const std::array<double, 3>&) { return true; });
  CHECK(same.cell_count() == base.cell_count());
  CHECK(same.face_count() == base.face_count());
  CHECK(same.total_measure() == doctest::Approx(base.total_measure()));

  CHECK_THROWS_AS(build_masked_domain(base,
                                      [](const std::array<double, 3>& c) {
                                        return (c[0] < 0.25 && c[1] < 0.25) ||
                                               (c[0] > 0.75 && c[1] > 0.75);
                                      }),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_masked_domain(base, [](const std::array<double, 3>&) { return false; }),
                  std::invalid_argument);
}

TEST_CASE("cantor approximation dimension and disjointness") {
  for (double eps : {0.25, 0.5, 0.75}) {
    const auto approx = build_cantor_approx(eps, 4);
    CHECK(approx.similarity_dimension() == doctest::Approx(1.0 - eps).epsilon(1e-9));
    CHECK(approx.intervals.size() == 16);
    for (std::size_t i = 0; i < approx.intervals.size(); ++i) {
      CHECK(approx.intervals[i][0] >= 0.25 - 1e-12);
      CHECK(approx.intervals[i][1] <= 0.75 + 1e-12);
      if (i > 0) CHECK(approx.intervals[i][0] > approx.intervals[i - 1][1]);
    }
  }
  CHECK_THROWS_AS(build_cantor_approx(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_cantor_approx(1.0, 2), std::invalid_argument);
}

TEST_CASE("glued cubes level 0 footprint") {
  const auto dom = build_glued_cubes(0.5, 0, 4);
  REQUIRE(dom.glue_info().has_value());
  const auto& glue = *dom.glue_info();
  CHECK(glue.glue_faces.size() == 4);
  CHECK(glue.glue_area == doctest::Approx(0.25));
  CHECK(glue.max_endpoint_rounding == doctest::Approx(0.0));
  CHECK(dom.total_measure() == doctest::Approx(2.0));

  for (auto f : glue.glue_faces) {
    const auto [c1, c2] = dom.face_cells(f);
    CHECK(dom.cell_component(c1) != dom.cell_component(c2));
  }
}

TEST_CASE("glued cubes cantor refinement trims the glue") {
  const auto level0 = build_glued_cubes(0.5, 0, 8);
  const auto level1 = build_glued_cubes(0.5, 1, 8);
  CHECK(level1.glue_info()->glue_faces.size() < level0.glue_info()->glue_faces.size());
  CHECK(level1.glue_info()->glue_area == doctest::Approx(0.125));
}

TEST_CASE("glue area scales by N times ratio per level") {
  const auto a1 = build_glued_cubes(0.5, 1, 32).glue_info()->glue_area;
  const auto a2 = build_glued_cubes(0.5, 2, 32).glue_info()->glue_area;
  // Two children of relative length 1/4: exact halving, exact arithmetic.
  CHECK(a2 / a1 == 0.5);
}

TEST_CASE("glued cubes misalignment is rejected") {
  CHECK_THROWS_AS(build_glued_cubes(0.5, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_glued_cubes(1.5, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_glued_cubes(0.5, 0, 6), std::invalid_argument);
}

TEST_CASE("glued cubes copy swap is a graph isomorphism") {
  const auto dom = build_glued_cubes(0.5, 1, 8);
  std::vector<std::int32_t> swapped(dom.cell_count());
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    auto key = dom.cell_key(c);
    key[3] = 1 - key[3];
    swapped[c] = dom.find_cell(key);
    REQUIRE(swapped[c] >= 0);
  }
  for (std::int32_t f = 0; f < dom.face_count(); ++f) {
    if (!dom.face_interior(f)) continue;
    const auto [c1, c2] = dom.face_cells(f);
    bool adjacent = false;
    for (const auto& nb : dom.neighbors(swapped[c1]))
      if (nb.cell == swapped[c2]) adjacent = true;
    CHECK(adjacent);
  }
}

TEST_CASE("geodesic distances on grids") {
  const auto dom = build_grid_domain(2, 2, 0.5);
  const auto c00 = dom.find_cell({0, 0, 0, 0});
  const auto c01 = dom.find_cell({0, 1, 0, 0});
  const auto c11 = dom.find_cell({1, 1, 0, 0});
  CHECK(geodesic_distance(dom, c00, c00) == 0.0);
  CHECK(geodesic_distance(dom, c00, c01) == 0.5);
  // Brute force over the 4-node graph: both corner-to-corner routes take
  // two steps.
  CHECK(geodesic_distance(dom, c00, c11) == 1.0);

  const auto grid = build_grid_domain(2, 8, 0.125);
  for (int i = 1; i < 8; ++i) {
    const auto a = grid.find_cell({0, 3, 0, 0});
    const auto b = grid.find_cell({i, 3, 0, 0});
    CHECK(geodesic_distance(grid, a, b) == doctest::Approx(i * 0.125));
  }
}

TEST_CASE("geodesic field reports unreachable cells") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  std::vector<char> allowed(dom.cell_count(), 1);
  for (std::int32_t c = 0; c < dom.cell_count(); ++c)
    if (dom.cell_key(c)[0] == 2) allowed[c] = 0;  // wall
  const std::array<std::int32_t, 1> src{dom.find_cell({0, 0, 0, 0})};
  const auto dist = geodesic_field(dom, src, allowed);
  CHECK(dist[dom.find_cell({3, 3, 0, 0})] == kUnreachable);
  CHECK(dist[dom.find_cell({1, 3, 0, 0})] < kUnreachable);
}

TEST_CASE("regularity report brackets the exhaustive bounds") {
  const auto dom = build_grid_domain(2, 16, 1.0 / 16);
  const double h = dom.spacing();

  // Exhaustive oracle over all cells and dyadic radii.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    for (double r : {2 * h, 4 * h, 8 * h}) {
      double mu = 0.0;
      for (auto m : geodesic_ball(dom, c, r)) mu += dom.cell_measure(m);
      const double density = mu / (r * r);
      lo = std::min(lo, density);
      hi = std::max(hi, density);
    }
  }
  CHECK(hi / lo <= 16.0);

  const auto rep = regularity_report(dom, 200);
  CHECK(rep.A_hat / rep.a_hat <= 16.0);
  CHECK(rep.a_hat > 0.0);
  CHECK(rep.C_mu_hat > 0.0);
}

TEST_CASE("regularity report on a single-cell mesh") {
  const auto base = build_grid_domain(2, 2, 0.5);
  const auto single = build_masked_domain(base, [](const std::array<double, 3>& c) {
    return c[0] < 0.5 && c[1] < 0.5;
  });
  REQUIRE(single.cell_count() == 1);
  const auto rep = regularity_report(single, 16);
  CHECK(rep.a_hat == doctest::Approx(rep.A_hat));
  CHECK(rep.C_mu_hat == doctest::Approx(1.0));
}

TEST_CASE("glued mesh keeps a finite doubling constant") {
  const auto dom = build_glued_cubes(0.5, 1, 8);
  const double h = dom.spacing();
  // Exhaustive small-mesh check across the glue.
  double worst = 0.0;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    for (double r : {2 * h, 4 * h}) {
      double mu = 0.0, mu2 = 0.0;
      for (auto m : geodesic_ball(dom, c, r)) mu += dom.cell_measure(m);
      for (auto m : geodesic_ball(dom, c, 2 * r)) mu2 += dom.cell_measure(m);
      worst = std::max(worst, mu2 / mu);
    }
  }
  CHECK(worst < 64.0);
  const auto rep = regularity_report(dom, 100);
  CHECK(rep.C_mu_hat < 64.0);
}

TEST_CASE("mesh json round trip") {
  const auto dom = build_glued_cubes(0.5, 0, 4);
  const auto text = export_mesh_json(dom);
  CHECK(text == export_mesh_json(dom));

  const auto back = import_mesh_json(text);
  CHECK(back.cell_count() == dom.cell_count());
  CHECK(back.face_count() == dom.face_count());
  CHECK(back.total_measure() == doctest::Approx(dom.total_measure()));
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    CHECK(back.cell_measure(c) == dom.cell_measure(c));
    CHECK(back.neighbors(c).size() == dom.neighbors(c).size());
  }
}

TEST_CASE("cell order is canonical") {
  const auto dom = build_glued_cubes(0.5, 0, 4);
  for (std::int32_t c = 1; c < dom.cell_count(); ++c)
    CHECK(dom.cell_key(c - 1) < dom.cell_key(c));
}

TEST_CASE("region validation") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  auto region = testing::column_region(dom);
  CHECK_NOTHROW(validate_region(dom, region));

  auto bad = region;
  bad.e.push_back(bad.f.front());
  CHECK_THROWS_AS(validate_region(dom, bad), std::invalid_argument);

  auto split = region;
  split.e = {dom.find_cell({0, 0, 0, 0}), dom.find_cell({0, 2, 0, 0})};
  CHECK_THROWS_AS(validate_region(dom, split), std::invalid_argument);
}
