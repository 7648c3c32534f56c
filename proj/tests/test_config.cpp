#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "certabs/config.hpp"
#include "certabs/hash.hpp"

using namespace certabs;

namespace {

const char* kBase = R"(
system:
  states: [x]
  controls: [u]
  constants: {k: 2}
  definitions:
    g: "k*u"
  dynamics: ["g/2"]
  X: {lower: [0], upper: [1]}
  U: {lower: [-1], upper: [1]}
  lipschitz: 1
  bound: "1"
labelling:
  propositions:
    safe: {lower: [0.2], upper: [0.8]}
    unsafe:
      - {lower: [0], upper: [0.2]}
      - {lower: [0.8], upper: [1.5]}
  complements: {safe: unsafe}
objective:
  formula: "G safe"
  initial: {lower: [0.4], upper: [0.6]}
parameters:
  delta1: 0
  delta2: 0.5
  epsilon: "0.05*2"
)";

bool mentions(const ConfigError& e, const std::string& what) {
  return std::any_of(e.errors().begin(), e.errors().end(),
                     [&](const std::string& m) { return m.find(what) != std::string::npos; });
}

std::vector<std::string> errors_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

std::string with(const std::string& from, const std::string& to) {
  std::string s = kBase;
  auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  s.replace(at, from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("a valid configuration") {
  RunConfig c = parse_config(kBase, "base.yaml");
  CHECK(c.origin == "base.yaml");
  CHECK(c.hash == fnv1a(kBase));
  CHECK(hex64(c.hash).size() == 16);
  CHECK(c.system.n() == 1);
  CHECK(c.system.f.size() == 1);
  CHECK(c.system.M == 1.0);
  CHECK(c.params.eps == doctest::Approx(0.1));
  CHECK_FALSE(c.params.preserving);
  CHECK(c.formula == Formula::always(Formula::atom("safe")));
  CHECK(c.complements.at("unsafe") == "safe");
  REQUIRE(c.initial.has_value());
  CHECK(*c.initial == Box({0.4}, {0.6}));
  CHECK(c.labelling[1].region.back() == Box({0.8}, {1}));
  CHECK(c.warnings.size() == 1);
  CHECK(c.sim.seed == 1);
  CHECK(c.out_dir == "out");
  VectorField f(c.system);
  CHECK(f(Vec{0.3}, Vec{0.25}) == Vec{0.25});
}

TEST_CASE("pi in numbers and dynamics") {
  auto c = parse_config(with("X: {lower: [0], upper: [1]}", "X: {lower: [0], upper: [\"pi/4\"]}"));
  CHECK(c.system.X.upper[0] == doctest::Approx(std::atan(1.0)));
  auto d = parse_config(with("dynamics: [\"g/2\"]", "dynamics: [\"sin(pi*u)\"]"));
  VectorField f(d.system);
  CHECK(f(Vec{0}, Vec{0.5}) == Vec{1.0});
}

TEST_CASE("problems are reported together") {
  auto errs = errors_of(with("lipschitz: 1", "lipschitz: -1\n  colour: red"));
  CHECK(errs.size() >= 2);

  std::string bad = with("delta2: 0.5", "delta2: 0");
  bad = bad.replace(bad.find("\"G safe\""), 8, "\"G (safe\"");
  auto e2 = errors_of(bad);
  CHECK(e2.size() >= 2);
}

TEST_CASE("individual errors") {
  auto check = [](const std::string& text, const std::string& what) {
    try {
      parse_config(text);
      FAIL("expected a configuration error mentioning " << what);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(mentions(e, what), what);
    }
  };
  check("labelling: {}\n", "missing section 'system'");
  check(with("dynamics: [\"g/2\"]", "dynamics: [\"g/2 + y\"]"), "y");
  check(with("dynamics: [\"g/2\"]", "dynamics: [\"g/\"]"), "column");
  check(with("G safe", "G missing"), "unknown proposition 'missing'");
  check(with("G safe", "X safe"), "next");
  check(with("delta2: 0.5", "delta2: 0"), "delta2 must exceed delta1");
  check(with("epsilon: \"0.05*2\"", "epsilon: \"0.05*\""), "epsilon");
  check(with("complements: {safe: unsafe}", "complements: {safe: other}"), "not a declared proposition");
  check(with("upper: [0.8]}\n    unsafe", "upper: [0.8, 1]}\n    unsafe"), "bounds per side");
  check(with("U: {lower: [-1], upper: [1]}", "U: {lower: [1], upper: [-1]}"), "lower bound exceeds upper bound");
  check(with("delta1: 0", "delta1: 0\n  colour: red"), "unknown key 'colour'");
  check("system: [\n", "");
}

TEST_CASE("parameter overrides are validated") {
  RunConfig c = parse_config(kBase);
  CHECK(validate_parameters(c).empty());
  c.params.tau = -1.0;
  CHECK_FALSE(validate_parameters(c).empty());
  c.params.tau.reset();
  c.params.T = 0.5;
  c.params.tau = 0.6;
  CHECK_FALSE(validate_parameters(c).empty());
}

TEST_CASE("loading from disk") {
  CHECK_THROWS(load_config("/nonexistent/config.yaml"));
}
