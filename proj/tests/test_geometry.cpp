#include "doctest.h"

#include <random>

#include "certabs/geometry.hpp"

using namespace certabs;

TEST_CASE("grid indexing on a unit lattice") {
  Grid g(Box({0}, {2}), 1.0);
  CHECK(g.size() == 2);
  double x = 0.3;
  CHECK(g.cell_index({&x, 1}) == MultiIndex{0});
  CHECK(g.cell_center(MultiIndex{0}) == Vec{0.5});
  x = 1.0;
  CHECK(g.cell_index({&x, 1}) == MultiIndex{1});
  x = 2.0;
  CHECK(g.cell_index({&x, 1}) == MultiIndex{1});
  x = 2.5;
  CHECK_THROWS_AS(g.cell_index({&x, 1}), DomainError);
  CHECK(g.cell_box(std::size_t{1}) == Box({1}, {2}));
}

TEST_CASE("grid flatten and unflatten") {
  Grid g(Box({0, -1, 2}, {1, 1, 2.5}), 0.25);
  CHECK(g.counts() == std::vector<std::int64_t>{4, 8, 2});
  for (std::size_t id = 0; id < g.size(); ++id) {
    CHECK(g.flatten(g.unflatten(id)) == id);
    Vec c = g.cell_center(id);
    CHECK(g.cell_id(c) == id);
  }
}

TEST_CASE("anchored grid keeps the lattice") {
  Grid g(Box({0.1}, {0.9}), 0.25, Vec{0});
  CHECK(g.size() == 4);
  CHECK(g.cell_center(std::size_t{0}) == Vec{0.125});
  CHECK(g.first() == std::vector<std::int64_t>{0});
}

TEST_CASE("erosion") {
  CHECK(erode_box(Box({0}, {4}), 1) == Box({1}, {3}));
  Box b({-1, 2}, {3, 5});
  CHECK(erode_box(b, 0) == b);
  CHECK_FALSE(erode_box(Box({0}, {1}), 0.6).has_value());
}

TEST_CASE("infinity norm") {
  Vec a{1, -3, 2}, b{0, 0, 0};
  CHECK(norm(a) == 3.0);
  CHECK(distance(a, b) == 3.0);
  CHECK(parse_norm("inf") == Norm::infinity);
  CHECK_THROWS(parse_norm("l2"));
}

TEST_CASE("ball_cover examples") {
  Grid g(Box({-2}, {2}), 1.0, Vec{0});
  double c = 0.0;
  auto cells = ball_cover(g, {&c, 1}, 0.5);
  REQUIRE(cells.size() == 2);
  CHECK(g.cell_center(cells[0]) == Vec{-0.5});
  CHECK(g.cell_center(cells[1]) == Vec{0.5});
  c = 0.3;
  CHECK(ball_cover(g, {&c, 1}, 0.0) == std::vector<std::size_t>{2});
  c = 2.6;
  CHECK(ball_cover(g, {&c, 1}, 0.7) == std::vector<std::size_t>{3});
  c = 5;
  CHECK(ball_cover(g, {&c, 1}, 0.7).empty());
}

TEST_CASE("ball_cover and lattice_center_range against a brute-force scan") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5), rad(0, 0.8);
  for (int it = 0; it < 300; ++it) {
    Grid g(Box({-1, -1}, {1, 0.5}), 0.2 + 0.1 * (it % 3));
    Vec c{u(rng), u(rng)};
    double r = rad(rng);
    std::vector<std::size_t> want, want_centers;
    for (std::size_t id = 0; id < g.size(); ++id) {
      Box b = g.cell_box(id);
      bool meets = true;
      for (std::size_t i = 0; i < 2; ++i)
        meets = meets && b.lower[i] <= c[i] + r && c[i] - r <= b.upper[i];
      if (meets) want.push_back(id);
      if (distance(g.cell_center(id), c) <= r) want_centers.push_back(id);
    }
    CHECK(ball_cover(g, c, r) == want);
    std::vector<std::size_t> got;
    for_each_cell(g, lattice_center_range(g, c, r), [&](std::size_t id) { got.push_back(id); });
    CHECK(got == want_centers);
  }
}

TEST_CASE("index ranges") {
  Grid g(Box({0, 0}, {1, 1}), 0.5);
  IndexRange r{{-1, 1}, {0, 3}};
  CHECK(r.count() == 6);
  IndexRange c = clip(g, r);
  CHECK(c.lo == MultiIndex{0, 1});
  CHECK(c.hi == MultiIndex{0, 1});
  CHECK(clip(g, IndexRange{{5, 0}, {6, 1}}).empty());
}
