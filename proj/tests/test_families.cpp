#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "modlab/families.hpp"
#include "modlab/mesh.hpp"
#include "test_support.hpp"

using namespace modlab;
using namespace modlab::testing;

namespace {

double enumerated_min_curve(const MeshDomain& dom, const FamilySpec& spec,
                            const Density& rho) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& path : enumerate_paths(dom, spec))
    best = std::min(best, curve_usage(dom, spec, path).dot(rho));
  return best;
}

double enumerated_min_cut(const MeshDomain& dom, const FamilySpec& spec,
                          const Density& rho) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& faces : enumerate_cuts(dom, spec))
    best = std::min(best, surface_usage(dom, spec, faces).dot(rho));
  return best;
}

}  // namespace

TEST_CASE("curve usage weights and totals") {
  const auto strip = strip_domain(3);
  const auto spec = connecting_spec(strip);
  const std::vector<std::int32_t> path{0, 1, 2};
  const auto usage = curve_usage(strip, spec, path);
  REQUIRE(usage.cells.size() == 3);
  CHECK(usage.weights[0] == 0.5);
  CHECK(usage.weights[1] == 1.0);
  CHECK(usage.weights[2] == 0.5);
  CHECK(usage.total() == 2.0);
}

TEST_CASE("curve usage two-cell path") {
  const auto dom = build_grid_domain(2, 2, 0.25);
  FamilySpec spec;
  spec.kind = FamilyKind::connecting;
  spec.region.g = {0, 1, 2, 3};
  spec.region.e = {dom.find_cell({0, 0, 0, 0})};
  spec.region.f = {dom.find_cell({0, 1, 0, 0})};
  const std::vector<std::int32_t> path{spec.region.e[0], spec.region.f[0]};
  CHECK(curve_usage(dom, spec, path).total() == 0.25);
}

TEST_CASE("curve usage L-shaped path") {
  const auto dom = build_grid_domain(2, 3, 1.0);
  FamilySpec spec;
  spec.kind = FamilyKind::connecting;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) spec.region.g.push_back(c);
  const auto a = dom.find_cell({0, 0, 0, 0});
  const auto b = dom.find_cell({1, 0, 0, 0});
  const auto c = dom.find_cell({2, 0, 0, 0});
  const auto d = dom.find_cell({2, 1, 0, 0});
  const auto e = dom.find_cell({2, 2, 0, 0});
  spec.region.e = {a};
  spec.region.f = {e};
  const std::vector<std::int32_t> path{a, b, c, d, e};
  CHECK(curve_usage(dom, spec, path).total() == 4.0);
}

TEST_CASE("curve usage input validation") {
  const auto strip = strip_domain(4);
  const auto spec = connecting_spec(strip);
  CHECK_THROWS_AS(curve_usage(strip, spec, std::vector<std::int32_t>{0, 2, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(curve_usage(strip, spec, std::vector<std::int32_t>{0, 1, 0, 1, 2, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(curve_usage(strip, spec, std::vector<std::int32_t>{1, 2, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(curve_usage(strip, spec, std::vector<std::int32_t>{0, 1, 2}),
                  std::invalid_argument);
}

TEST_CASE("surface usage splits areas across sides") {
  const auto dom = build_grid_domain(2, 2, 0.5);
  const auto spec = separating_spec(dom);
  std::int32_t face = -1;
  for (std::int32_t f = 0; f < dom.face_count(); ++f)
    if (dom.face_interior(f)) {
      face = f;
      break;
    }
  const auto usage = surface_usage(dom, spec, std::vector<std::int32_t>{face});
  REQUIRE(usage.cells.size() == 2);
  CHECK(usage.weights[0] == 0.25);
  CHECK(usage.weights[1] == 0.25);
  CHECK(usage.total() == 0.5);
}

TEST_CASE("surface usage of the vertical midline") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  const auto spec = separating_spec(dom);
  std::vector<std::int32_t> midline;
  for (std::int32_t f = 0; f < dom.face_count(); ++f) {
    if (!dom.face_interior(f)) continue;
    const auto [c1, c2] = dom.face_cells(f);
    if (dom.cell_key(c1)[0] == 1 && dom.cell_key(c2)[0] == 2) midline.push_back(f);
  }
  REQUIRE(midline.size() == 4);
  CHECK(surface_usage(dom, spec, midline).total() == 1.0);
  CHECK(is_separating(dom, spec, midline));

  midline.pop_back();
  CHECK_FALSE(is_separating(dom, spec, midline));
  CHECK_FALSE(is_separating(dom, spec, std::vector<std::int32_t>{}));
}

TEST_CASE("surface usage on the glue weights one cell per copy") {
  const auto dom = build_glued_cubes(0.5, 0, 4);
  FamilySpec spec;
  spec.kind = FamilyKind::separating;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) spec.region.g.push_back(c);
  spec.region.e = {dom.find_cell({0, 0, 3, 0}), dom.find_cell({0, 1, 3, 0})};
  spec.region.f = {dom.find_cell({0, 0, 3, 1}), dom.find_cell({0, 1, 3, 1})};

  const auto f = dom.glue_info()->glue_faces.front();
  const auto usage = surface_usage(dom, spec, std::vector<std::int32_t>{f});
  REQUIRE(usage.cells.size() == 2);
  CHECK(dom.cell_component(usage.cells[0]) != dom.cell_component(usage.cells[1]));
  CHECK(usage.weights[0] == doctest::Approx(dom.face_area(f) / 2));
}

TEST_CASE("surface usage rejects faces outside the closure of G") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  FamilySpec spec = separating_spec(dom);
  // Shrink G to the left half.
  spec.region.g.clear();
  spec.region.f.clear();
  for (std::int32_t c = 0; c < dom.cell_count(); ++c)
    if (dom.cell_key(c)[0] < 2) spec.region.g.push_back(c);
  for (std::int32_t c : spec.region.g)
    if (dom.cell_key(c)[0] == 1) spec.region.f.push_back(c);

  std::int32_t outside = -1;
  for (std::int32_t f = 0; f < dom.face_count(); ++f) {
    const auto [c1, c2] = dom.face_cells(f);
    if (dom.cell_key(c1)[0] == 3 && (c2 < 0 || dom.cell_key(c2)[0] == 3)) outside = f;
  }
  REQUIRE(outside >= 0);
  CHECK_THROWS_AS(surface_usage(dom, spec, std::vector<std::int32_t>{outside}),
                  std::invalid_argument);
}

TEST_CASE("min weight curve against exhaustive enumeration") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  const auto spec = connecting_spec(dom);

  Density ones(dom.cell_count(), 1.0);
  const auto res = min_weight_curve(dom, spec, ones);
  CHECK_FALSE(res.family_empty);
  // Straight row: h/2 + h + h + h/2 at h = 1/4.
  CHECK(res.value == doctest::Approx(0.75));
  CHECK(res.value == doctest::Approx(enumerated_min_curve(dom, spec, ones)));
  CHECK(res.object.size() == 4);

  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    const auto rho = random_density(dom, seed);
    const auto r = min_weight_curve(dom, spec, rho);
    CHECK(r.value == doctest::Approx(enumerated_min_curve(dom, spec, rho)).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(curve_usage(dom, spec, r.object).dot(rho)).epsilon(1e-12));
  }
}

TEST_CASE("min weight curve degenerate densities") {
  const auto dom = build_grid_domain(2, 3, 1.0);
  const auto spec = connecting_spec(dom);

  Density zeros(dom.cell_count(), 0.0);
  CHECK(min_weight_curve(dom, spec, zeros).value == 0.0);

  // Everything expensive except the middle row corridor.
  Density costly(dom.cell_count(), 1e9);
  for (std::int32_t c = 0; c < dom.cell_count(); ++c)
    if (dom.cell_key(c)[1] == 1) costly[c] = 1.0;
  const auto res = min_weight_curve(dom, spec, costly);
  for (auto c : res.object) CHECK(dom.cell_key(c)[1] == 1);
}

TEST_CASE("min weight curve signals an empty family") {
  // G made of two blobs that only meet outside G.
  const auto dom = build_grid_domain(2, 4, 0.25);
  FamilySpec spec;
  spec.kind = FamilyKind::connecting;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    const int i = dom.cell_key(c)[0];
    if (i == 0 || i == 3) spec.region.g.push_back(c);
    if (i == 0) spec.region.e.push_back(c);
    if (i == 3) spec.region.f.push_back(c);
  }
  CHECK(min_weight_curve(dom, spec, Density(dom.cell_count(), 1.0)).family_empty);
}

TEST_CASE("min weight cut against exhaustive enumeration") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  const auto spec = separating_spec(dom);

  Density ones(dom.cell_count(), 1.0);
  const auto res = min_weight_cut(dom, spec, ones);
  CHECK_FALSE(res.family_empty);
  CHECK(res.value == doctest::Approx(1.0));
  CHECK(is_separating(dom, spec, res.object));
  CHECK(res.value == doctest::Approx(enumerated_min_cut(dom, spec, ones)));

  CHECK(min_weight_cut(dom, spec, Density(dom.cell_count(), 0.0)).value == 0.0);

  for (std::uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
    const auto rho = random_density(dom, seed);
    const auto r = min_weight_cut(dom, spec, rho);
    CHECK(is_separating(dom, spec, r.object));
    CHECK(r.value == doctest::Approx(enumerated_min_cut(dom, spec, rho)).epsilon(1e-10));
    CHECK(r.value ==
          doctest::Approx(surface_usage(dom, spec, r.object).dot(rho)).epsilon(1e-12));
  }
}

TEST_CASE("min weight cut across the glue") {
  const auto dom = build_glued_cubes(0.5, 0, 4);
  FamilySpec spec;
  spec.kind = FamilyKind::separating;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) spec.region.g.push_back(c);
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    if (dom.cell_key(c)[2] == 3 && dom.cell_component(c) == 0) spec.region.e.push_back(c);
    if (dom.cell_key(c)[2] == 3 && dom.cell_component(c) == 1) spec.region.f.push_back(c);
  }
  const auto res = min_weight_cut(dom, spec, Density(dom.cell_count(), 1.0));
  CHECK(res.value == doctest::Approx(0.25));
  CHECK(res.object.size() == 4);
  for (auto f : res.object) {
    const auto [c1, c2] = dom.face_cells(f);
    CHECK(dom.cell_component(c1) != dom.cell_component(c2));
  }
}

TEST_CASE("truncation shrinks the cut family monotonically") {
  const auto dom = build_grid_domain(2, 8, 0.125);
  const auto rho = random_density(dom, 77, 2.0);

  double untruncated = 0.0;
  std::vector<double> values;
  for (int j : {4, 8, 64}) {
    auto spec = separating_spec(dom);
    spec.truncation_j = j;
    const auto res = min_weight_cut(dom, spec, rho);
    REQUIRE_FALSE(res.family_empty);
    values.push_back(res.value);
    CHECK(is_separating(dom, spec, res.object));
  }
  {
    const auto res = min_weight_cut(dom, separating_spec(dom), rho);
    untruncated = res.value;
  }
  // Larger j admits more cuts, so oracle minima cannot increase.
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] <= values[i - 1] + 1e-12);
  CHECK(untruncated <= values.back() + 1e-12);
}

TEST_CASE("truncation can exclude the whole family") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  auto spec = separating_spec(dom);
  spec.truncation_j = 1;  // reach 1.0 covers every face
  const auto res = min_weight_cut(dom, spec, random_density(dom, 3));
  CHECK(res.family_empty);
}

TEST_CASE("truncated cuts dodge the excluded collar") {
  const auto dom = build_grid_domain(2, 8, 0.125);
  auto spec = separating_spec(dom);
  spec.truncation_j = 5;  // excludes faces within distance 0.2 of E u F
  CutOracle oracle(dom, spec);
  const auto res = oracle.most_violated(random_density(dom, 5));
  REQUIRE_FALSE(res.family_empty);
  for (auto f : res.object) CHECK_FALSE(oracle.excluded_faces()[f]);
  CHECK(is_separating(dom, spec, res.object));
}

TEST_CASE("disconnected terminals make the empty cut separating") {
  const auto dom = build_grid_domain(2, 4, 0.25);
  FamilySpec spec;
  spec.kind = FamilyKind::separating;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    const int i = dom.cell_key(c)[0];
    if (i == 0 || i == 3) spec.region.g.push_back(c);
    if (i == 0) spec.region.e.push_back(c);
    if (i == 3) spec.region.f.push_back(c);
  }
  const auto res = min_weight_cut(dom, spec, Density(dom.cell_count(), 1.0));
  CHECK_FALSE(res.family_empty);
  CHECK(res.object.empty());
  CHECK(res.usage.cells.empty());
  CHECK(res.value == 0.0);
}

TEST_CASE("object json round trip") {
  const std::vector<std::int32_t> ids{3, 1, 4, 1, 5};
  CHECK(object_from_json(object_to_json(ids)) == ids);
}
