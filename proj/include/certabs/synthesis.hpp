/*
 * synthesis.hpp
 *
 * Fixed-point controller synthesis for G p, F q, p U q on a finite game,
 * dwell-time wrapping, and the sampled-data controller and closed loop.
 *
 * Nondeterminism is adversarial: an action certifies a cell only when every
 * successor is good.
 */

#ifndef CERTABS_SYNTHESIS_HPP_
#define CERTABS_SYNTHESIS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "certabs/abstraction.hpp"
#include "certabs/labelling.hpp"
#include "certabs/logic.hpp"
#include "certabs/system.hpp"

namespace certabs {

using CellSet = std::vector<std::uint8_t>;  // bitmap over states

/*
 * class: Game
 *
 * Finite game arena. Successor sets of unblocked pairs are non-empty.
 */
class Game {
public:
  virtual ~Game() = default;
  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual bool blocked(std::size_t q, std::size_t a) const = 0;
  /* appends the successors of (q, a) */
  virtual void successors(std::size_t q, std::size_t a, std::vector<std::size_t>& out) const = 0;
  /* every successor lies in W */
  virtual bool successors_within(std::size_t q, std::size_t a, const CellSet& W) const;
  /*
   * Appends (once each, using `mark` as scratch, left cleared) every state
   * that can reach a state of `changed` in at most `steps` transitions.
   * Over-approximation is allowed.
   */
  virtual void predecessor_candidates(const std::vector<std::size_t>& changed, std::size_t steps,
                                      std::vector<std::uint8_t>& mark,
                                      std::vector<std::size_t>& out) const = 0;
};

/* explicit successor lists; an empty list means blocked */
class ExplicitGame : public Game {
public:
  ExplicitGame(std::size_t states, std::size_t actions,
               std::vector<std::vector<std::vector<std::size_t>>> succ);

  std::size_t num_states() const override { return succ_.size(); }
  std::size_t num_actions() const override { return actions_; }
  bool blocked(std::size_t q, std::size_t a) const override { return succ_[q][a].empty(); }
  void successors(std::size_t q, std::size_t a, std::vector<std::size_t>& out) const override;
  void predecessor_candidates(const std::vector<std::size_t>& changed, std::size_t steps,
                              std::vector<std::uint8_t>& mark,
                              std::vector<std::size_t>& out) const override;

private:
  std::size_t actions_;
  std::vector<std::vector<std::vector<std::size_t>>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

/* the abstraction's successor boxes seen as a game */
class AbstractionGame : public Game {
public:
  explicit AbstractionGame(const FiniteAbstraction& abs);

  std::size_t num_states() const override { return abs_.num_states(); }
  std::size_t num_actions() const override { return abs_.num_actions(); }
  bool blocked(std::size_t q, std::size_t a) const override { return abs_.blocked(q, a); }
  void successors(std::size_t q, std::size_t a, std::vector<std::size_t>& out) const override;
  bool successors_within(std::size_t q, std::size_t a, const CellSet& W) const override;
  void predecessor_candidates(const std::vector<std::size_t>& changed, std::size_t steps,
                              std::vector<std::uint8_t>& mark,
                              std::vector<std::size_t>& out) const override;

private:
  const FiniteAbstraction& abs_;
  std::vector<std::size_t> stride_;
};

/* {q : some unblocked a with Post(q, a) inside W} */
CellSet cpre(const Game& g, const CellSet& W);

enum class ObjectiveKind { invariance, reachability, until };
const char* objective_name(ObjectiveKind k);

/* the synthesizable fragment of an NNF formula */
struct FragmentSpec {
  ObjectiveKind kind = ObjectiveKind::invariance;
  Formula constraint;  // safe set (invariance) or left operand (until)
  Formula target;      // reachability / until target
};

/*
 * G p, F q and p U q with propositional p, q. A propositional formula on
 * its own is "false U q". Anything else raises FormulaError.
 */
FragmentSpec classify(const Formula& nnf);

/* cells whose label satisfies the propositional formula */
CellSet cell_predicate(const Formula& prop, const std::vector<PropSet>& labels,
                       const std::vector<std::string>& alphabet);

struct Objective {
  ObjectiveKind kind = ObjectiveKind::invariance;
  CellSet constraint;
  CellSet target;  // unused for invariance
};

/*
 * Strategy over (cell, memory). Memory is (counter, latched action); at
 * counter 0 the action table is consulted and latched, at counters
 * 1..dwell-1 the latched action is repeated. Cells with kDischarged have met
 * a reachability target.
 */
struct Strategy {
  static constexpr int kVersion = 1;
  static constexpr std::int32_t kUndefined = -1;
  static constexpr std::int32_t kDischarged = -2;

  ObjectiveKind kind = ObjectiveKind::invariance;
  std::string formula;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t dwell = 1;
  CellSet winning;
  std::vector<std::int32_t> action;  // per cell, counter-0 decision
  std::size_t iterations = 0;  // rounds that changed the winning set

  std::size_t winning_count() const;
  bool empty() const { return winning_count() == 0; }

  struct Memory {
    std::size_t counter = 0;
    std::int32_t latched = kUndefined;
    friend bool operator==(const Memory&, const Memory&) = default;
  };
  struct Step {
    std::int32_t action;  // kDischarged when the target is met
    Memory next;
  };
  /* nullopt outside the domain */
  std::optional<Step> step(std::size_t cell, const Memory& m) const;
};

/*
 * Least fixed point for reachability/until, greatest for invariance. With
 * dwell N > 1 each decision commits to N steps of one action: intermediate
 * cells must satisfy the constraint and reaching the target on the way
 * discharges the path.
 */
Strategy synthesize(const Game& g, const Objective& obj, std::size_t dwell = 1);

/* same table, counter product of width N */
Strategy add_dwell(const Strategy& s, std::size_t N);

class ControllerRefusal : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/*
 * Sampled-data controller: quantize x to its cell, consult the strategy,
 * emit the action's control value.
 */
class SampledController {
public:
  SampledController(Strategy s, const Grid& states, std::vector<Vec> actions);

  struct Decision {
    Vec u;
    bool discharged = false;
    std::int32_t action = Strategy::kUndefined;
  };
  Decision next(std::span<const double> x);
  void reset() { mem_ = {}; }
  const Strategy::Memory& memory() const noexcept { return mem_; }
  const Strategy& strategy() const noexcept { return s_; }

private:
  Strategy s_;
  Grid states_;
  std::vector<Vec> actions_;
  Strategy::Memory mem_;
};

SampledController refine_to_sampled(const Strategy& s, const FiniteAbstraction& abs);

struct ClosedLoopResult {
  Trajectory traj;
  Trace trace;                 // plain labelling at sampling instants
  std::vector<Vec> controls;   // one per period
  std::vector<std::int32_t> actions;
  Verdict discrete = Verdict::unknown;
  Verdict continuous = Verdict::unknown;
  double max_deviation = 0.0;  // to the nearest sampling instant
  double deviation_bound = 0.0;
  bool discharged = false;
  bool exited = false;
};

struct ClosedLoopOptions {
  double tau = 0.0;
  double delta = 0.0;
  std::size_t steps = 100;
  std::size_t substeps = 10;
};

/*
 * Alternate controller lookups and simulated periods; the run stops early
 * when a target is discharged or the state leaves X. Throws ControllerRefusal.
 */
ClosedLoopResult closed_loop_run(const SystemSpec& sys, const VectorField& field,
                                 SampledController& ctrl, const LabellingSpec& labels,
                                 const Formula& formula, std::span<const double> x0,
                                 const ClosedLoopOptions& opt, DisturbanceSource& noise);

}  // namespace certabs

#endif
