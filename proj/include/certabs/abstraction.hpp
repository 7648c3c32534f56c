/*
 * abstraction.hpp
 *
 * The finite transition system built on a state grid and a control grid,
 * with transitions given by a ball around the Euler endpoint, plus the
 * parameter bookkeeping that makes it sandwiched between two perturbed
 * sampled systems.
 */

#ifndef CERTABS_ABSTRACTION_HPP_
#define CERTABS_ABSTRACTION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "certabs/geometry.hpp"
#include "certabs/system.hpp"

namespace certabs {

class ParameterError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct AbstractionParams {
  double tau = 0.0;
  double eta = 0.0;
  double mu = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double eps = 0.0;
  bool preserving = false;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double r = 0.0;       // transition radius
  double margin = 0.0;  // margin_lhs value, feasible when < delta2
};

/* fill eps1, eps2, r and margin from the primary fields */
AbstractionParams make_params(double L, double M, double tau, double eta, double mu, double delta1,
                              double delta2, double eps, bool preserving);

/* (M + delta) tau / 2, plus eta/2 for a non-preserving partition */
double strengthening_margin(double M, double delta, double tau, double eta, bool preserving);

bool margin_holds(const AbstractionParams& p);
bool labelling_budget_holds(const AbstractionParams& p);

/*
 * Largest tau (to bisection accuracy) under the schedule eta = tau^2,
 * mu = tau such that margin_lhs < delta2 and eps1 + eps2 <= eps. The
 * search halves from `ceiling` until feasible, then bisects.
 */
AbstractionParams choose_parameters(double L, double M, double delta1, double delta2, double eps,
                                    bool preserving, double ceiling = 1.0);

struct Delta2Requirement {
  double delta2_min = 0.0;
  double eps_min = 0.0;
};

/* margin_lhs under the schedule at tau, and eps1 + eps2 at that delta2 (preserving partition) */
Delta2Requirement min_delta2_for_tau(double L, double M, double tau, double delta1);

/* 0.99 (delta2 - delta1) tau_star / (1 + delta2 - delta1) */
double dwell_mismatch_bound(double tau_star, double delta1, double delta2);

struct BuildOptions {
  std::size_t max_cells = 5'000'000;
  unsigned jobs = 1;
};

/*
 * class: FiniteAbstraction
 *
 * States are the cells of a grid over X, actions the centers of a grid over
 * U clamped into U. (q, a, q') is a transition iff the center of q' lies
 * within r of q + tau f(q, a). The successor set of every pair is a box of
 * lattice cells, stored as per-axis offsets relative to q. A pair whose box
 * leaves the grid is blocked.
 */
class FiniteAbstraction {
public:
  FiniteAbstraction() = default;

  const SystemSpec& system() const noexcept { return sys_; }
  const AbstractionParams& params() const noexcept { return params_; }
  const Grid& states() const noexcept { return states_; }
  const Grid& controls() const noexcept { return controls_; }
  const std::vector<Vec>& actions() const noexcept { return actions_; }

  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions() const noexcept { return actions_.size(); }
  double tau() const noexcept { return params_.tau; }
  double radius() const noexcept { return params_.r; }

  Vec euler_endpoint(std::size_t q, std::size_t a) const;

  /* lattice successor box, in grid indices, not clipped */
  IndexRange successor_range(std::size_t q, std::size_t a) const;
  bool blocked(std::size_t q, std::size_t a) const { return blocked_[q * actions_.size() + a] != 0; }
  std::size_t blocked_count() const noexcept { return blocked_count_; }

  /* in-grid successors, sorted */
  std::vector<std::size_t> post(std::size_t q, std::size_t a) const;

  /* raw offset table: pair p = q*|A|+a holds lo[0..n) then hi[0..n) */
  const std::int16_t* offsets(std::size_t q, std::size_t a) const {
    return &offsets_[(q * actions_.size() + a) * 2 * states_.dim()];
  }
  /* per-axis extreme offsets over all pairs */
  const std::vector<std::int16_t>& min_offset() const noexcept { return min_off_; }
  const std::vector<std::int16_t>& max_offset() const noexcept { return max_off_; }

  /* FNV-1a over the materialized relation */
  std::uint64_t relation_hash() const;

private:
  friend FiniteAbstraction build_abstraction(const SystemSpec&, const AbstractionParams&,
                                             const BuildOptions&);
  SystemSpec sys_;
  AbstractionParams params_;
  Grid states_;
  Grid controls_;
  std::vector<Vec> actions_;
  std::vector<std::int16_t> offsets_;
  std::vector<std::uint8_t> blocked_;
  std::size_t blocked_count_ = 0;
  std::vector<std::int16_t> min_off_, max_off_;
};

FiniteAbstraction build_abstraction(const SystemSpec& sys, const AbstractionParams& p,
                                    const BuildOptions& opt = {});

/* the action list alone: control cell centers clamped into U */
std::vector<Vec> control_actions(const Grid& controls, const Box& U);

struct SandwichReport {
  bool lower_ok = true;  // cells of the exact delta1 reach set are successors
  bool upper_ok = true;  // successor cells lie in the exact delta2 reach set
  std::size_t pairs_checked = 0;
  std::vector<std::string> counterexamples;  // at most 10
  bool passed() const { return lower_ok && upper_ok; }
};

/*
 * Exact check of both inclusions for x' = a x + b u + c (one state, one
 * control). The affine form is detected numerically; other systems are
 * rejected with std::invalid_argument. The reach sets are taken from the
 * whole cell of q and, for the upper direction, the whole control cell of
 * the action; the constraint of staying in X is not modelled.
 */
SandwichReport check_sandwich(const SystemSpec& sys, const FiniteAbstraction& abs, double delta2);

}  // namespace certabs

#endif
