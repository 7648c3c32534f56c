#include "doctest.h"

#include <random>

#include "certabs/labelling.hpp"

using namespace certabs;

namespace {

LabellingSpec single(double lo, double hi) { return LabellingSpec(1, {{"p", {Box({lo}, {hi})}}}); }

bool has_p(const LabellingSpec& s, double x) { return s.label({&x, 1}).contains(0); }

/* p holds at every point of x + eps*B sampled densely */
bool quantified(const LabellingSpec& s, double x, double eps) {
  const int n = 400;
  for (int k = 0; k <= n; ++k)
    if (!has_p(s, x - eps + 2 * eps * k / n)) return false;
  return true;
}

}  // namespace

TEST_CASE("point labels use closed regions") {
  LabellingSpec s = single(0, 4);
  CHECK(has_p(s, 2));
  CHECK_FALSE(has_p(s, 5));
  CHECK(has_p(s, 4));
  CHECK(s.names() == std::vector<std::string>{"p"});
  CHECK(s.index_of("p") == 0u);
  CHECK_FALSE(s.index_of("q").has_value());
}

TEST_CASE("strengthening a single box") {
  LabellingSpec s = strengthen(single(0, 4), 1);
  REQUIRE(s[0].region.size() == 1);
  CHECK(s[0].region[0] == Box({1}, {3}));
  CHECK(has_p(s, 2));
  CHECK_FALSE(has_p(s, 0.5));
  LabellingSpec z = strengthen(single(0, 4), 0);
  CHECK(z[0].region == single(0, 4)[0].region);
  CHECK(strengthen(single(0, 1), 0.6)[0].region.empty());
}

TEST_CASE("strengthening a union is conservative") {
  LabellingSpec u(1, {{"p", {Box({0}, {1}), Box({1}, {2})}}});
  LabellingSpec s = strengthen(u, 0.4);
  REQUIRE(s[0].region.size() == 2);
  CHECK(s[0].region[0] == Box({0.4}, {0.6}));
  CHECK(s[0].region[1] == Box({1.4}, {1.6}));
  CHECK(quantified(u, 1.0, 0.4));
  CHECK_FALSE(has_p(s, 1.0));
}

TEST_CASE("cell labels") {
  Grid g(Box({0}, {2}), 1.0);
  auto full = cell_label(single(0, 2), g);
  CHECK(full[0].contains(0));
  CHECK(full[1].contains(0));
  auto part = cell_label(single(0, 1.5), g);
  CHECK(part[0].contains(0));
  CHECK_FALSE(part[1].contains(0));
  LabellingSpec empty(1, {{"p", {}}});
  auto none = cell_label(empty, g);
  CHECK(none[0].empty());
  CHECK(none[1].empty());
}

TEST_CASE("cell labels under-approximate point labels") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  LabellingSpec s(2, {{"a", {Box({0.1, 0.2}, {0.6, 0.9})}}, {"b", {Box({0.5, 0}, {1, 0.4}), Box({0, 0.7}, {0.3, 1})}}});
  Grid g(Box({0, 0}, {1, 1}), 0.05);
  auto labels = cell_label(s, g, 2);
  for (std::size_t id = 0; id < g.size(); ++id) {
    Box b = g.cell_box(id);
    for (int k = 0; k < 5; ++k) {
      Vec x{b.lower[0] + u(rng) * 0.05, b.lower[1] + u(rng) * 0.05};
      CHECK(labels[id].subset_of(s.label(x)));
    }
  }
}

TEST_CASE("clipping regions to X") {
  LabellingSpec s(1, {{"p", {Box({-1}, {0.5}), Box({2}, {3})}}});
  auto warnings = s.clip_to(Box({0}, {1}));
  CHECK(warnings.size() == 2);
  REQUIRE(s[0].region.size() == 1);
  CHECK(s[0].region[0] == Box({0}, {0.5}));
}

TEST_CASE("composition, antitonicity and conservatism on random unions") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t violations = 0, single_mismatch = 0;
  for (int it = 0; it < 10000; ++it) {
    std::vector<Box> boxes;
    int nb = 1 + static_cast<int>(u(rng) * 3);
    for (int b = 0; b < nb; ++b) {
      double lo = u(rng) * 4, w = u(rng) * 2;
      boxes.push_back(Box({lo}, {lo + w}));
    }
    LabellingSpec s(1, {{"p", boxes}});
    double x = u(rng) * 6 - 1, e1 = u(rng) * 0.5, e2 = e1 + u(rng) * 0.5;
    bool joint = has_p(strengthen(s, e1 + e2), x);
    bool nested = has_p(strengthen(strengthen(s, e1), e2), x);
    if (joint && !nested) ++violations;
    if (nb == 1 && joint != nested) ++single_mismatch;
    if (has_p(strengthen(s, e2), x) && !has_p(strengthen(s, e1), x)) ++violations;
    if (has_p(strengthen(s, e1), x) && !quantified(s, x, e1)) ++violations;
  }
  CHECK(violations == 0);
  CHECK(single_mismatch == 0);
}
