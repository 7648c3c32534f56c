/*
 * synthesis.cpp
 */

#include "certabs/synthesis.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace certabs {

bool Game::successors_within(std::size_t q, std::size_t a, const CellSet& W) const {
  if (blocked(q, a)) return false;
  std::vector<std::size_t> succ;
  successors(q, a, succ);
  return std::all_of(succ.begin(), succ.end(), [&](std::size_t s) { return W[s] != 0; });
}

ExplicitGame::ExplicitGame(std::size_t states, std::size_t actions,
                           std::vector<std::vector<std::vector<std::size_t>>> succ)
    : actions_(actions), succ_(std::move(succ)) {
  if (succ_.size() != states) throw std::invalid_argument("successor table has wrong state count");
  pred_.resize(states);
  for (std::size_t q = 0; q < states; ++q) {
    if (succ_[q].size() != actions) throw std::invalid_argument("successor table has wrong action count");
    for (std::size_t a = 0; a < actions; ++a)
      for (std::size_t s : succ_[q][a]) {
        if (s >= states) throw std::invalid_argument("successor index out of range");
        pred_[s].push_back(q);
      }
  }
  for (auto& p : pred_) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
  }
}

void ExplicitGame::successors(std::size_t q, std::size_t a, std::vector<std::size_t>& out) const {
  out.insert(out.end(), succ_[q][a].begin(), succ_[q][a].end());
}

void ExplicitGame::predecessor_candidates(const std::vector<std::size_t>& changed, std::size_t steps,
                                          std::vector<std::uint8_t>& mark,
                                          std::vector<std::size_t>& out) const {
  const std::size_t first = out.size();
  std::vector<std::size_t> level = changed, next;
  for (std::size_t k = 0; k < steps && !level.empty(); ++k) {
    next.clear();
    for (std::size_t c : level)
      for (std::size_t p : pred_[c])
        if (!mark[p]) {
          mark[p] = 1;
          out.push_back(p);
          next.push_back(p);
        }
    level.swap(next);
  }
  for (std::size_t i = first; i < out.size(); ++i) mark[out[i]] = 0;
}

namespace {
constexpr std::size_t kMaxDim = 16;
}

AbstractionGame::AbstractionGame(const FiniteAbstraction& abs) : abs_(abs) {
  const Grid& g = abs.states();
  if (g.dim() > kMaxDim) throw std::invalid_argument("state dimension above 16 is not supported");
  stride_.assign(g.dim(), 1);
  for (std::size_t i = g.dim(); i-- > 1;)
    stride_[i - 1] = stride_[i] * static_cast<std::size_t>(g.counts()[i]);
}

void AbstractionGame::successors(std::size_t q, std::size_t a, std::vector<std::size_t>& out) const {
  for_each_cell(abs_.states(), abs_.successor_range(q, a), [&](std::size_t id) { out.push_back(id); });
}

bool AbstractionGame::successors_within(std::size_t q, std::size_t a, const CellSet& W) const {
  if (abs_.blocked(q, a)) return false;
  const std::size_t n = stride_.size();
  const std::int16_t* off = abs_.offsets(q, a);
  std::array<std::int64_t, kMaxDim> lo{}, hi{}, k{};
  std::size_t rest = q;
  for (std::size_t i = 0; i < n; ++i) {
    auto ki = static_cast<std::int64_t>(rest / stride_[i]);
    rest %= stride_[i];
    lo[i] = ki + off[i];
    hi[i] = ki + off[n + i];
    if (lo[i] > hi[i]) return false;
  }
  k = lo;
  while (true) {
    std::size_t id = 0;
    for (std::size_t i = 0; i < n; ++i) id += static_cast<std::size_t>(k[i]) * stride_[i];
    if (!W[id]) return false;
    std::size_t axis = n;
    while (true) {
      if (axis == 0) return true;
      --axis;
      if (k[axis] < hi[axis]) {
        ++k[axis];
        break;
      }
      k[axis] = lo[axis];
    }
  }
}

void AbstractionGame::predecessor_candidates(const std::vector<std::size_t>& changed,
                                             std::size_t steps, std::vector<std::uint8_t>& mark,
                                             std::vector<std::size_t>& out) const {
  const Grid& g = abs_.states();
  const std::size_t nq = g.size();
  if (changed.size() * 8 >= nq) {
    for (std::size_t q = 0; q < nq; ++q) out.push_back(q);
    return;
  }
  const std::size_t n = g.dim();
  const auto s = static_cast<std::int64_t>(steps);
  IndexRange r{MultiIndex(n), MultiIndex(n)};
  const std::size_t first = out.size();
  for (std::size_t c : changed) {
    MultiIndex k = g.unflatten(c);
    for (std::size_t i = 0; i < n; ++i) {
      r.lo[i] = k[i] - s * abs_.max_offset()[i];
      r.hi[i] = k[i] - s * abs_.min_offset()[i];
    }
    for_each_cell(g, r, [&](std::size_t id) {
      if (!mark[id]) {
        mark[id] = 1;
        out.push_back(id);
      }
    });
  }
  for (std::size_t i = first; i < out.size(); ++i) mark[out[i]] = 0;
}

CellSet cpre(const Game& g, const CellSet& W) {
  CellSet out(g.num_states(), 0);
  for (std::size_t q = 0; q < g.num_states(); ++q)
    for (std::size_t a = 0; a < g.num_actions(); ++a)
      if (g.successors_within(q, a, W)) {
        out[q] = 1;
        break;
      }
  return out;
}

const char* objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::invariance: return "invariance";
    case ObjectiveKind::reachability: return "reachability";
    case ObjectiveKind::until: return "until";
  }
  return "?";
}

FragmentSpec classify(const Formula& f) {
  FragmentSpec spec;
  if (f.is_propositional()) {
    spec.kind = ObjectiveKind::until;
    spec.constraint = Formula::bottom();
    spec.target = f;
    return spec;
  }
  if (f.op() == FormulaOp::release && f.lhs().op() == FormulaOp::bottom && f.rhs().is_propositional()) {
    spec.kind = ObjectiveKind::invariance;
    spec.constraint = f.rhs();
    return spec;
  }
  if (f.op() == FormulaOp::until && f.lhs().is_propositional() && f.rhs().is_propositional()) {
    spec.kind = f.lhs().op() == FormulaOp::top ? ObjectiveKind::reachability : ObjectiveKind::until;
    spec.constraint = f.lhs();
    spec.target = f.rhs();
    return spec;
  }
  throw FormulaError("formula " + f.to_string() +
                     " is outside the synthesizable fragment (G p, F q, p U q with propositional p, q)");
}

namespace {

bool eval_prop(const FormulaNode* f, PropSet s, const std::vector<std::string>& alphabet) {
  switch (f->op) {
    case FormulaOp::top: return true;
    case FormulaOp::bottom: return false;
    case FormulaOp::atom: {
      auto it = std::find(alphabet.begin(), alphabet.end(), f->atom);
      return s.contains(static_cast<std::size_t>(it - alphabet.begin()));
    }
    case FormulaOp::negation: return !eval_prop(f->lhs.get(), s, alphabet);
    case FormulaOp::conjunction:
      return eval_prop(f->lhs.get(), s, alphabet) &&
             eval_prop(f->rhs.get(), s, alphabet);
    case FormulaOp::disjunction:
      return eval_prop(f->lhs.get(), s, alphabet) ||
             eval_prop(f->rhs.get(), s, alphabet);
    default: throw FormulaError("temporal operator inside a state predicate");
  }
}

}  // namespace

CellSet cell_predicate(const Formula& prop, const std::vector<PropSet>& labels,
                       const std::vector<std::string>& alphabet) {
  if (!prop.is_propositional()) throw FormulaError("state predicate must be propositional");
  for (const auto& a : prop.atoms())
    if (std::find(alphabet.begin(), alphabet.end(), a) == alphabet.end())
      throw FormulaError("unknown proposition '" + a + "'");
  CellSet out(labels.size(), 0);
  /* labels repeat heavily; memoize by bitmask */
  std::vector<std::pair<std::uint64_t, bool>> memo;
  for (std::size_t q = 0; q < labels.size(); ++q) {
    std::uint64_t key = labels[q].bits();
    auto it = std::find_if(memo.begin(), memo.end(), [&](const auto& m) { return m.first == key; });
    bool v;
    if (it != memo.end()) {
      v = it->second;
    } else {
      v = eval_prop(prop.node(), labels[q], alphabet);
      if (memo.size() < 256) memo.emplace_back(key, v);
    }
    out[q] = v ? 1 : 0;
  }
  return out;
}

std::size_t Strategy::winning_count() const {
  return static_cast<std::size_t>(std::count(winning.begin(), winning.end(), 1));
}

std::optional<Strategy::Step> Strategy::step(std::size_t cell, const Memory& m) const {
  if (cell >= num_states) return std::nullopt;
  if (winning[cell] && action[cell] == kDischarged) return Step{kDischarged, m};
  if (m.counter == 0 || dwell <= 1) {
    if (!winning[cell] || action[cell] < 0) return std::nullopt;
    return Step{action[cell], Memory{dwell <= 1 ? std::size_t{0} : std::size_t{1}, action[cell]}};
  }
  return Step{m.latched, Memory{(m.counter + 1) % dwell, m.latched}};
}

namespace {

/*
 * One decision of the dwell game: commit to `a` for N steps from q.
 * Intermediate cells must satisfy the constraint (target cells discharge
 * for reachability/until), final cells must lie in W.
 */
class MacroStep {
public:
  MacroStep(const Game& g, const Objective& obj, std::size_t N)
      : g_(g), obj_(obj), N_(N), mark_(g.num_states(), 0) {}

  bool ok(std::size_t q, std::size_t a, const CellSet& W) {
    if (N_ == 1) return g_.successors_within(q, a, W);
    const bool discharge = obj_.kind != ObjectiveKind::invariance;
    frontier_.assign(1, q);
    bool good = true;
    for (std::size_t step = 1; step <= N_ && good && !frontier_.empty(); ++step) {
      next_.clear();
      for (std::size_t s : frontier_) {
        if (g_.blocked(s, a)) {
          good = false;
          break;
        }
        succ_.clear();
        g_.successors(s, a, succ_);
        for (std::size_t t : succ_)
          if (!mark_[t]) {
            mark_[t] = 1;
            next_.push_back(t);
          }
      }
      for (std::size_t t : next_) mark_[t] = 0;
      if (!good) break;
      frontier_.clear();
      for (std::size_t t : next_) {
        if (discharge && obj_.target[t]) continue;
        if (step == N_ ? !W[t] : !obj_.constraint[t]) {
          good = false;
          break;
        }
        frontier_.push_back(t);
      }
    }
    return good;
  }

private:
  const Game& g_;
  const Objective& obj_;
  std::size_t N_;
  std::vector<std::uint8_t> mark_;
  std::vector<std::size_t> frontier_, next_, succ_;
};

std::int32_t least_action(const Game& g, MacroStep& step, std::size_t q, const CellSet& W) {
  for (std::size_t a = 0; a < g.num_actions(); ++a)
    if (step.ok(q, a, W)) return static_cast<std::int32_t>(a);
  return Strategy::kUndefined;
}

}  // namespace

Strategy synthesize(const Game& g, const Objective& obj, std::size_t dwell) {
  const std::size_t nq = g.num_states();
  if (dwell < 1) throw std::invalid_argument("dwell must be >= 1");
  if (obj.constraint.size() != nq) throw std::invalid_argument("constraint set has wrong size");
  if (obj.kind != ObjectiveKind::invariance && obj.target.size() != nq)
    throw std::invalid_argument("target set has wrong size");

  Strategy s;
  s.kind = obj.kind;
  s.num_states = nq;
  s.num_actions = g.num_actions();
  s.dwell = dwell;
  s.action.assign(nq, Strategy::kUndefined);
  MacroStep step(g, obj, dwell);
  std::vector<std::uint8_t> mark(nq, 0);
  std::vector<std::size_t> candidates, changed;
  std::size_t rounds = 0;

  if (obj.kind == ObjectiveKind::invariance) {
    CellSet W = obj.constraint;
    for (std::size_t q = 0; q < nq; ++q)
      if (W[q]) candidates.push_back(q);
    while (!candidates.empty()) {
      if (rounds > nq) throw std::logic_error("invariance fixed point exceeded |Q| rounds");
      changed.clear();
      for (std::size_t q : candidates)
        if (W[q] && least_action(g, step, q, W) == Strategy::kUndefined) changed.push_back(q);
      if (!changed.empty()) ++rounds;
      for (std::size_t q : changed) W[q] = 0;
      candidates.clear();
      if (!changed.empty()) g.predecessor_candidates(changed, dwell, mark, candidates);
    }
    for (std::size_t q = 0; q < nq; ++q)
      if (W[q]) s.action[q] = least_action(g, step, q, W);
    s.winning = std::move(W);
  } else {
    CellSet W(nq, 0);
    for (std::size_t q = 0; q < nq; ++q)
      if (obj.target[q]) {
        W[q] = 1;
        s.action[q] = Strategy::kDischarged;
        changed.push_back(q);
      }
    std::vector<std::pair<std::size_t, std::int32_t>> added;
    while (!changed.empty()) {
      if (rounds > nq) throw std::logic_error("reachability fixed point exceeded |Q| rounds");
      candidates.clear();
      g.predecessor_candidates(changed, dwell, mark, candidates);
      added.clear();
      for (std::size_t q : candidates) {
        if (W[q] || !obj.constraint[q]) continue;
        std::int32_t a = least_action(g, step, q, W);
        if (a != Strategy::kUndefined) added.emplace_back(q, a);
      }
      changed.clear();
      if (!added.empty()) ++rounds;
      for (auto [q, a] : added) {
        W[q] = 1;
        s.action[q] = a;
        changed.push_back(q);
      }
    }
    s.winning = std::move(W);
  }
  s.iterations = rounds;
  return s;
}

Strategy add_dwell(const Strategy& s, std::size_t N) {
  if (N < 1) throw std::invalid_argument("dwell must be >= 1");
  Strategy out = s;
  out.dwell = N;
  return out;
}

SampledController::SampledController(Strategy s, const Grid& states, std::vector<Vec> actions)
    : s_(std::move(s)), states_(states), actions_(std::move(actions)) {
  if (s_.num_states != states_.size() || s_.num_actions != actions_.size())
    throw std::invalid_argument("strategy does not match the abstraction");
}

SampledController::Decision SampledController::next(std::span<const double> x) {
  if (!states_.covered().contains(x)) throw ControllerRefusal("state outside X");
  const std::size_t cell = states_.cell_id(x);
  auto st = s_.step(cell, mem_);
  if (!st) {
    std::string where = "(";
    for (std::size_t i = 0; i < x.size(); ++i) where += (i ? ", " : "") + std::to_string(x[i]);
    throw ControllerRefusal("state " + where + ") in cell " + std::to_string(cell) +
                            " is outside the winning set");
  }
  Decision d;
  d.action = st->action;
  if (st->action == Strategy::kDischarged) {
    d.discharged = true;
    return d;
  }
  mem_ = st->next;
  d.u = actions_[static_cast<std::size_t>(st->action)];
  return d;
}

SampledController refine_to_sampled(const Strategy& s, const FiniteAbstraction& abs) {
  return SampledController(s, abs.states(), abs.actions());
}

ClosedLoopResult closed_loop_run(const SystemSpec& sys, const VectorField& field,
                                 SampledController& ctrl, const LabellingSpec& labels,
                                 const Formula& formula, std::span<const double> x0,
                                 const ClosedLoopOptions& opt, DisturbanceSource& noise) {
  ClosedLoopResult res;
  res.trace.alphabet = labels.names();
  res.deviation_bound = intersample_bound(sys.M, opt.delta, opt.tau);
  Vec x(x0.begin(), x0.end());
  for (std::size_t i = 0;; ++i) {
    res.trace.steps.push_back(labels.label(x));
    if (i == opt.steps) break;
    auto d = ctrl.next(x);
    if (d.discharged) {
      res.discharged = true;
      break;
    }
    const double t0 = static_cast<double>(i) * opt.tau;
    Trajectory seg = simulate_step(sys, field, x, d.u, opt.tau, opt.delta, opt.substeps, noise, t0);
    const Vec& start = seg.x.front();
    const Vec& end = seg.x.back();
    for (std::size_t j = 0; j < seg.x.size(); ++j) {
      bool first_half = seg.t[j] - t0 <= opt.tau / 2 || seg.exited;
      res.max_deviation = std::max(res.max_deviation, distance(seg.x[j], first_half ? start : end));
    }
    res.traj.append(seg);
    res.controls.push_back(d.u);
    res.actions.push_back(d.action);
    x = end;
    if (seg.exited) {
      res.exited = true;
      res.trace.steps.push_back(labels.label(x));
      break;
    }
  }
  if (res.traj.t.empty()) {
    res.traj.t.push_back(0.0);
    res.traj.x.push_back(x);
  }
  res.discrete = check_discrete(res.trace, formula);
  res.continuous = check_continuous(res.traj, labels, formula);
  return res;
}

}  // namespace certabs
