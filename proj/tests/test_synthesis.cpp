#include "doctest.h"

#include <random>

#include "certabs/io.hpp"
#include "certabs/synthesis.hpp"

using namespace certabs;

namespace {

using Succ = std::vector<std::vector<std::vector<std::size_t>>>;

/* Q = {q0, q1, q2}, one action: q0 -> q1, q1 -> q1, q2 -> {q0, q2} */
ExplicitGame three() { return ExplicitGame(3, 1, Succ{{{1}}, {{1}}, {{0, 2}}}); }

Succ random_succ(std::mt19937_64& rng, std::size_t nq, std::size_t na) {
  Succ s(nq, std::vector<std::vector<std::size_t>>(na));
  for (auto& row : s)
    for (auto& post : row) {
      if (rng() % 5 == 0) continue;  // blocked
      for (std::size_t q = 0; q < nq; ++q)
        if (rng() % 3 == 0) post.push_back(q);
      if (post.empty()) post.push_back(rng() % nq);
    }
  return s;
}

bool inside(const std::vector<std::size_t>& post, const CellSet& W) {
  if (post.empty()) return false;
  for (auto q : post)
    if (!W[q]) return false;
  return true;
}

/* backward induction by plain iteration to a fixed point */
CellSet oracle_invariance(const Succ& s, const CellSet& safe) {
  CellSet W = safe;
  for (bool again = true; again;) {
    again = false;
    CellSet next(W.size(), 0);
    for (std::size_t q = 0; q < W.size(); ++q)
      for (const auto& post : s[q])
        if (W[q] && inside(post, W)) next[q] = 1;
    if (next != W) {
      W = next;
      again = true;
    }
  }
  return W;
}

CellSet oracle_until(const Succ& s, const CellSet& c, const CellSet& t) {
  CellSet W = t;
  for (bool again = true; again;) {
    again = false;
    for (std::size_t q = 0; q < W.size(); ++q) {
      if (W[q] || !c[q]) continue;
      for (const auto& post : s[q])
        if (inside(post, W)) {
          W[q] = 1;
          again = true;
          break;
        }
    }
  }
  return W;
}

CellSet random_set(std::mt19937_64& rng, std::size_t n, int one_in) {
  CellSet s(n);
  for (auto& b : s) b = rng() % one_in != 0;
  return s;
}

SystemSpec integrator() {
  SystemSpec s;
  s.state_names = {"x"};
  s.control_names = {"u"};
  s.f = {parse_expression("u")};
  s.X = Box({0}, {1});
  s.U = Box({-1}, {1});
  s.L = 1;
  s.M = 1;
  return s;
}

}  // namespace

TEST_CASE("cpre on the three-state game") {
  auto g = three();
  CHECK(cpre(g, CellSet{0, 1, 0}) == CellSet{1, 1, 0});
  CHECK(cpre(g, CellSet{1, 1, 1}) == CellSet{1, 1, 1});
  CHECK(cpre(g, CellSet{0, 0, 0}) == CellSet{0, 0, 0});
  ExplicitGame b(2, 1, Succ{{{}}, {{0}}});
  CHECK(cpre(b, CellSet{1, 1}) == CellSet{0, 1});
}

TEST_CASE("fixed points on the three-state game") {
  auto g = three();
  auto inv = synthesize(g, {ObjectiveKind::invariance, CellSet{1, 1, 0}, {}});
  CHECK(inv.winning == CellSet{1, 1, 0});
  auto reach = synthesize(g, {ObjectiveKind::reachability, CellSet{1, 1, 1}, CellSet{0, 1, 0}});
  CHECK(reach.winning == CellSet{1, 1, 0});
  CHECK(reach.action[1] == Strategy::kDischarged);
  CHECK(reach.action[0] == 0);
  auto all = synthesize(g, {ObjectiveKind::reachability, CellSet{1, 1, 1}, CellSet{1, 1, 1}});
  CHECK(all.winning == CellSet{1, 1, 1});
  CHECK(all.iterations == 0);
}

TEST_CASE("winning sets match backward induction on random games") {
  std::mt19937_64 rng(101);
  for (int it = 0; it < 100; ++it) {
    std::size_t nq = 1 + rng() % 8, na = 1 + rng() % 3;
    Succ s = random_succ(rng, nq, na);
    ExplicitGame g(nq, na, s);
    CellSet safe = random_set(rng, nq, 4), c = random_set(rng, nq, 3), t = random_set(rng, nq, 3);
    for (std::size_t q = 0; q < nq; ++q) t[q] = t[q] && rng() % 2;
    auto inv = synthesize(g, {ObjectiveKind::invariance, safe, {}});
    CHECK(inv.winning == oracle_invariance(s, safe));
    auto un = synthesize(g, {ObjectiveKind::until, c, t});
    CHECK(un.winning == oracle_until(s, c, t));
    CHECK(un.iterations <= nq);
    for (std::size_t q = 0; q < nq; ++q) {
      if (inv.winning[q]) CHECK(inside(s[q][static_cast<std::size_t>(inv.action[q])], inv.winning));
      if (un.winning[q] && !t[q]) CHECK(inside(s[q][static_cast<std::size_t>(un.action[q])], un.winning));
    }
  }
}

TEST_CASE("adversarial runs of reach strategies hit the target in time") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 100; ++it) {
    std::size_t nq = 2 + rng() % 7, na = 1 + rng() % 3;
    Succ s = random_succ(rng, nq, na);
    ExplicitGame g(nq, na, s);
    CellSet c = random_set(rng, nq, 4), t(nq, 0);
    t[rng() % nq] = 1;
    auto st = synthesize(g, {ObjectiveKind::until, c, t});
    for (std::size_t q0 = 0; q0 < nq; ++q0) {
      if (!st.winning[q0]) continue;
      for (int run = 0; run < 20; ++run) {
        std::size_t q = q0;
        Strategy::Memory m;
        bool done = false;
        for (std::size_t k = 0; k <= nq && !done; ++k) {
          auto step = st.step(q, m);
          REQUIRE(step.has_value());
          if (step->action == Strategy::kDischarged) {
            done = true;
            break;
          }
          CHECK(c[q]);
          const auto& post = s[q][static_cast<std::size_t>(step->action)];
          q = post[rng() % post.size()];
          m = step->next;
        }
        CHECK(done);
      }
    }
  }
}

TEST_CASE("dwell strategies hold each action for N steps") {
  std::mt19937_64 rng(31);
  std::size_t checked_runs = 0;
  for (int it = 0; it < 200; ++it) {
    std::size_t nq = 2 + rng() % 7, na = 1 + rng() % 3;
    Succ s = random_succ(rng, nq, na);
    ExplicitGame g(nq, na, s);
    CellSet safe = random_set(rng, nq, 5);
    auto st = synthesize(g, {ObjectiveKind::invariance, safe, {}}, 3);
    for (std::size_t q0 = 0; q0 < nq; ++q0) {
      if (!st.winning[q0]) continue;
      for (int run = 0; run < 5; ++run) {
        std::size_t q = q0;
        Strategy::Memory m;
        std::vector<std::int32_t> emitted;
        for (int k = 0; k < 30; ++k) {
          auto step = st.step(q, m);
          REQUIRE(step.has_value());
          CHECK(safe[q]);
          if (k % 3 == 0) CHECK(st.winning[q]);
          emitted.push_back(step->action);
          const auto& post = s[q][static_cast<std::size_t>(step->action)];
          REQUIRE_FALSE(post.empty());
          q = post[rng() % post.size()];
          m = step->next;
        }
        for (std::size_t k = 0; k < emitted.size(); ++k) CHECK(emitted[k] == emitted[k - k % 3]);
        ++checked_runs;
      }
    }
  }
  CHECK(checked_runs >= 1000);
}

TEST_CASE("dwell one is the plain strategy") {
  auto g = three();
  Objective o{ObjectiveKind::invariance, CellSet{1, 1, 0}, {}};
  auto a = synthesize(g, o), b = synthesize(g, o, 1);
  CHECK(a.winning == b.winning);
  CHECK(a.action == b.action);
  auto c = add_dwell(a, 1);
  CHECK(c.dwell == 1);
  auto st = c.step(0, {});
  REQUIRE(st.has_value());
  CHECK(st->next == Strategy::Memory{0, 0});
}

TEST_CASE("fragment classification") {
  ComplementMap none;
  auto k = [&](const char* s) { return classify(to_nnf(parse_formula(s), none)).kind; };
  CHECK(k("G safe") == ObjectiveKind::invariance);
  CHECK(k("F goal") == ObjectiveKind::reachability);
  CHECK(k("inside U goal") == ObjectiveKind::until);
  CHECK(k("goal & b") == ObjectiveKind::until);
  CHECK(k("G (a | b)") == ObjectiveKind::invariance);
  CHECK_THROWS_AS(classify(parse_formula("G F p")), FormulaError);
  CHECK_THROWS_AS(classify(parse_formula("p R q")), FormulaError);
  CHECK_THROWS_AS(classify(parse_formula("F p & G q")), FormulaError);
}

TEST_CASE("cell predicates") {
  std::vector<PropSet> labels{PropSet(0), PropSet(1), PropSet(2), PropSet(3)};
  std::vector<std::string> ab{"a", "b"};
  CHECK(cell_predicate(parse_formula("a | b"), labels, ab) == CellSet{0, 1, 1, 1});
  CHECK(cell_predicate(parse_formula("a & b"), labels, ab) == CellSet{0, 0, 0, 1});
  CHECK(cell_predicate(parse_formula("true"), labels, ab) == CellSet{1, 1, 1, 1});
}

TEST_CASE("abstraction game agrees with its explicit successor lists") {
  SystemSpec s = integrator();
  auto abs = build_abstraction(s, make_params(1, 1, 0.05, 0.01, 0.25, 0, 0.5, 1, false));
  AbstractionGame g(abs);
  Succ succ(abs.num_states(), std::vector<std::vector<std::size_t>>(abs.num_actions()));
  for (std::size_t q = 0; q < abs.num_states(); ++q)
    for (std::size_t a = 0; a < abs.num_actions(); ++a)
      if (!abs.blocked(q, a)) succ[q][a] = abs.post(q, a);
  ExplicitGame e(abs.num_states(), abs.num_actions(), succ);
  std::mt19937_64 rng(2);
  for (int it = 0; it < 20; ++it) {
    CellSet W = random_set(rng, abs.num_states(), 8);
    CHECK(cpre(g, W) == cpre(e, W));
    CellSet c = random_set(rng, abs.num_states(), 6), t(abs.num_states(), 0);
    t[rng() % t.size()] = 1;
    for (std::size_t N : {1, 2, 3}) {
      CHECK(synthesize(g, {ObjectiveKind::invariance, W, {}}, N).winning ==
            synthesize(e, {ObjectiveKind::invariance, W, {}}, N).winning);
      CHECK(synthesize(g, {ObjectiveKind::until, c, t}, N).winning ==
            synthesize(e, {ObjectiveKind::until, c, t}, N).winning);
    }
  }
}

TEST_CASE("sampled controller and closed loop on the integrator") {
  SystemSpec s = integrator();
  auto p = choose_parameters(1, 1, 0, 0.5, 0.1, false);
  auto abs = build_abstraction(s, p);
  LabellingSpec labels(1, {{"safe", {Box({0.2}, {0.8})}}});
  auto strong = strengthen(labels, p.eps1);
  auto cells = cell_label(strong, abs.states());
  Formula f = parse_formula("G safe");
  AbstractionGame g(abs);
  auto st = synthesize(g, {ObjectiveKind::invariance, cell_predicate(f.rhs(), cells, strong.names()), {}});
  REQUIRE_FALSE(st.empty());

  auto ctrl = refine_to_sampled(st, abs);
  std::size_t q = 0;
  while (!st.winning[q]) ++q;
  Vec c = abs.states().cell_center(q);
  auto d = ctrl.next(c);
  CHECK(d.action == st.action[q]);
  CHECK(d.u == abs.actions()[static_cast<std::size_t>(st.action[q])]);
  Vec nudged{c[0] + 0.49 * p.eta};
  CHECK(ctrl.next(nudged).action == st.action[q]);
  CHECK_THROWS_AS(ctrl.next(abs.states().cell_center(std::size_t{0})), ControllerRefusal);
  CHECK_THROWS_AS(ctrl.next(Vec{1.5}), ControllerRefusal);

  VectorField field(s);
  DisturbanceSource pick(5);
  for (int run = 0; run < 50; ++run) {
    std::size_t cell;
    do cell = static_cast<std::size_t>(pick.uniform01() * abs.num_states());
    while (!st.winning[cell]);
    Box b = abs.states().cell_box(cell);
    Vec x0{b.lower[0] + pick.uniform01() * p.eta};
    ctrl.reset();
    DisturbanceSource noise(100 + run);
    ClosedLoopOptions opt{p.tau, 0.0, 100, 10};
    auto res = closed_loop_run(s, field, ctrl, labels, f, x0, opt, noise);
    CHECK(res.discrete == Verdict::sat);
    CHECK(res.max_deviation <= res.deviation_bound + 1e-12);
    CHECK(res.trace.steps.size() == 101);
    for (std::size_t k = 0; k < res.traj.size(); k += 10) CHECK(st.winning[abs.states().cell_id(res.traj.x[k])]);

    ctrl.reset();
    DisturbanceSource again(100 + run);
    auto rerun = closed_loop_run(s, field, ctrl, labels, f, x0, opt, again);
    CHECK(rerun.traj.x == res.traj.x);
    CHECK(rerun.actions == res.actions);
  }
}

TEST_CASE("strategy files round-trip") {
  SystemSpec s = integrator();
  auto abs = build_abstraction(s, make_params(1, 1, 0.05, 0.01, 0.25, 0, 0.5, 1, false));
  AbstractionGame g(abs);
  CellSet c(abs.num_states(), 1), t(abs.num_states(), 0);
  t[40] = t[41] = 1;
  auto st = synthesize(g, {ObjectiveKind::reachability, c, t}, 3);
  st.formula = "F goal";
  auto file = make_strategy_file(st, abs, "00000000deadbeef");
  std::string text = strategy_to_json(file);
  auto back = strategy_from_json(text);
  CHECK(back.strategy.winning == st.winning);
  CHECK(back.strategy.action == st.action);
  CHECK(back.strategy.dwell == 3);
  CHECK(back.strategy.kind == ObjectiveKind::reachability);
  CHECK(back.actions == abs.actions());
  CHECK(back.grid().counts() == abs.states().counts());
  CHECK(strategy_to_json(back) == text);

  std::string broken = text;
  broken.replace(broken.find("\"version\": 1"), 12, "\"version\": 9");
  CHECK_THROWS_AS(strategy_from_json(broken), IoError);
  CHECK_THROWS_AS(strategy_from_json("{}"), IoError);
}
