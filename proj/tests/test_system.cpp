#include "doctest.h"

#include <cmath>
#include <random>

#include "certabs/system.hpp"

using namespace certabs;

namespace {

SystemSpec one_d(const char* f, double L = 1, double M = 1) {
  SystemSpec s;
  s.state_names = {"x"};
  s.control_names = {"u"};
  s.f = {parse_expression(f)};
  s.X = Box({-10}, {10});
  s.U = Box({-1}, {1});
  s.L = L;
  s.M = M;
  return s;
}

SystemSpec car() {
  SystemSpec s;
  s.state_names = {"x", "y", "theta"};
  s.control_names = {"v", "phi"};
  s.constants = {{"a", 0.5}, {"b", 1.0}};
  s.definitions = {{"alpha", parse_expression("atan(a*tan(phi)/b)")}};
  s.f = {parse_expression("v*cos(alpha+theta)/cos(alpha)"),
         parse_expression("v*sin(alpha+theta)/cos(alpha)"), parse_expression("v*tan(phi)")};
  const double pi = std::acos(-1.0);
  s.X = Box({0, 0, -pi}, {10, 10, pi});
  s.U = Box({-1, -1}, {1, 1});
  s.L = 1.2674;
  s.M = 1.5574;
  return s;
}

/* long double evaluation of the radius formula */
long double radius_ld(long double eta, long double mu, long double tau, long double d1, long double L,
                      long double M) {
  long double e = std::exp(L * tau);
  return eta / 2 + eta / 2 * e + (d1 / L + mu / 2) * (e - 1) + M * (e - L * tau - 1) / L;
}

}  // namespace

TEST_CASE("car vector field") {
  SystemSpec s = car();
  CHECK(s.validate().empty());
  VectorField f(s);
  CHECK(f(Vec{0, 0, 0}, Vec{1, 0}) == Vec{1, 0, 0});
  CHECK(f(Vec{0, 0, 0}, Vec{0, 0}) == Vec{0, 0, 0});
  Vec got = f(Vec{1, 2, 0.4}, Vec{0.7, -0.3});
  double al = std::atan(0.5 * std::tan(-0.3));
  CHECK(got[0] == doctest::Approx(0.7 * std::cos(al + 0.4) / std::cos(al)));
  CHECK(got[1] == doctest::Approx(0.7 * std::sin(al + 0.4) / std::cos(al)));
  CHECK(got[2] == doctest::Approx(0.7 * std::tan(-0.3)));
  CHECK(eval_vector_field(s, Vec{1, 2, 0.4}, Vec{0.7, -0.3}) == got);
}

TEST_CASE("identity in u") {
  VectorField f(one_d("u"));
  CHECK(f(Vec{3.0}, Vec{0.3}) == Vec{0.3});
}

TEST_CASE("validation lists problems") {
  SystemSpec s = one_d("u + z");
  s.L = -1;
  s.M = -2;
  auto errs = s.validate();
  CHECK(errs.size() >= 3);
  CHECK_THROWS(s.validate_or_throw());
}

TEST_CASE("gronwall radius values") {
  CHECK(gronwall_radius(0.01, 0.1, 0.1, 0, 1, 1) == doctest::Approx(0.020955).epsilon(1e-4));
  CHECK(gronwall_radius(0.01, 0.1, 0.1, 0, 1, 1) ==
        doctest::Approx(static_cast<double>(radius_ld(0.01L, 0.1L, 0.1L, 0, 1, 1))).epsilon(1e-13));
  CHECK(gronwall_radius(0.3, 0.2, 0, 0.5, 2, 3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(gronwall_radius(0.01, 0.1, 0.1, 0.2, 1e-8, 1) == doctest::Approx(0.03).epsilon(1e-6));
  CHECK(gronwall_radius(0.01, 0.1, 0.1, 0.2, 0, 1) == doctest::Approx(0.03).epsilon(1e-15));
}

TEST_CASE("L near zero agrees with the limit") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    double eta = u(rng) * 0.1, mu = u(rng), tau = u(rng), d1 = u(rng), M = 2 * u(rng);
    double a = gronwall_radius(eta, mu, tau, d1, 1e-8, M);
    double b = gronwall_radius(eta, mu, tau, d1, 0, M);
    CHECK(std::fabs(a - b) <= 1e-6 * std::max(b, 1e-300));
  }
}

TEST_CASE("gronwall radius is monotone in each argument") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    double v[6] = {u(rng) * 0.1, u(rng), u(rng), u(rng), 3 * u(rng), 2 * u(rng)};
    double base = gronwall_radius(v[0], v[1], v[2], v[3], v[4], v[5]);
    for (int k : {0, 1, 2, 3, 5}) {
      double w[6];
      std::copy(v, v + 6, w);
      w[k] += u(rng) * 0.5;
      CHECK(gronwall_radius(w[0], w[1], w[2], w[3], w[4], w[5]) >= base);
    }
  }
}

TEST_CASE("margin lhs") {
  CHECK(margin_lhs(0.04, 0.2, 0.2, 0, 1.2674, 1.5574) == doctest::Approx(1.4745).epsilon(1e-3));
  CHECK(margin_lhs(0, 0, 1e-6, 0, 1.2674, 1.5574) < 1e-5);
  const double L = 1.2674, M = 1.5574;
  for (double d1 : {0.0, 0.1, 0.3}) {
    double t = 1e-4;
    CHECK(std::fabs(margin_lhs(t * t, t, t, d1, L, M) - d1) < 1e-3);
    double prev = margin_lhs(1e-2 * 1e-2, 1e-2, 1e-2, d1, L, M);
    for (double tau = 5e-3; tau > 1e-5; tau /= 2) {
      double m = margin_lhs(tau * tau, tau, tau, d1, L, M);
      CHECK(m < prev);
      prev = m;
    }
  }
}

TEST_CASE("intersample bound") {
  CHECK(intersample_bound(1.5574, 0.1, 0.2) == doctest::Approx(0.16574).epsilon(1e-12));
  CHECK(intersample_bound(1.5574, 0.1, 0) == 0.0);
  CHECK(intersample_bound(0, 0, 5) == 0.0);
}

TEST_CASE("exp helpers") {
  CHECK(exp_growth(0, 0.3) == 0.3);
  CHECK(exp_growth2(0, 0.3) == 0.0);
  CHECK(exp_growth(2, 0.5) == doctest::Approx(std::expm1(1.0) / 2));
  CHECK(exp_growth2(1e-9, 1) == doctest::Approx(0.5e-9).epsilon(1e-6));
}

TEST_CASE("simulate_step endpoints") {
  SystemSpec s = one_d("u");
  auto t = simulate_step(s, Vec{0}, Vec{1}, 0.5, 0, 10, 1);
  CHECK(t.x.back()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.size() == 11);
  CHECK(t.h == doctest::Approx(0.05));

  SystemSpec e = one_d("x");
  auto te = simulate_step(e, Vec{1}, Vec{0}, 0.1, 0, 64, 1);
  CHECK(std::fabs(te.x.back()[0] - std::exp(0.1)) < 1e-9);
}

TEST_CASE("simulate_step matches the affine closed form") {
  for (double a : {-5.0, -1.0, 0.5, 2.0}) {
    SystemSpec s = one_d("a*x + u");
    s.constants = {{"a", a}};
    double tau = 0.5 / std::fabs(a), x0 = 0.7, u = -0.4;
    auto t = simulate_step(s, Vec{x0}, Vec{u}, tau, 0, 256, 1);
    double exact = std::exp(a * tau) * x0 + u / a * std::expm1(a * tau);
    CHECK(std::fabs(t.x.back()[0] - exact) < 1e-8);
  }
}

TEST_CASE("disturbed simulation is reproducible and bounded") {
  SystemSpec s = one_d("u");
  auto a = simulate_step(s, Vec{0}, Vec{0}, 1.0, 0.2, 20, 42);
  auto b = simulate_step(s, Vec{0}, Vec{0}, 1.0, 0.2, 20, 42);
  CHECK(a.x == b.x);
  CHECK(a.disturbances == b.disturbances);
  for (const auto& w : a.disturbances) CHECK(std::fabs(w[0]) <= 0.2);
  auto c = simulate_step(s, Vec{0}, Vec{0}, 1.0, 0.2, 20, 43);
  CHECK(a.x != c.x);
}

TEST_CASE("simulation stops on leaving X") {
  SystemSpec s = one_d("u");
  s.X = Box({0}, {1});
  auto t = simulate_step(s, Vec{0.9}, Vec{1}, 0.5, 0, 10, 1);
  CHECK(t.exited);
  CHECK(t.exit_index == t.size() - 1);
  CHECK(t.x.back()[0] > 1.0);
}

TEST_CASE("constant estimates") {
  SystemSpec s = one_d("u");
  s.X = Box({0}, {1});
  auto est = estimate_constants(s, 2000, 1);
  CHECK(est.M <= 1.0);
  CHECK(est.M > 0.99);
  CHECK_FALSE(est.rigorous);

  SystemSpec c = one_d("3");
  CHECK(estimate_constants(c, 500, 2).L == 0.0);

  auto ce = estimate_constants(car(), 5000, 3);
  CHECK(ce.M <= 1.5574 + 1e-4);
  CHECK(spot_check_constants(one_d("u"), 1000, 1).empty());
  CHECK_FALSE(spot_check_constants(one_d("3*u", 1, 1), 1000, 1).empty());
}
