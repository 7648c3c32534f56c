/*
 * commands.hpp
 *
 * The CLI commands as library calls, plus the pipeline pieces they share.
 * Every command writes its report to `out`, its files under the output
 * directory, and returns the process exit code.
 */

#ifndef CERTABS_COMMANDS_HPP_
#define CERTABS_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "certabs/abstraction.hpp"
#include "certabs/config.hpp"
#include "certabs/io.hpp"
#include "certabs/synthesis.hpp"

namespace certabs {

struct CommandOptions {
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<double> mu;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> strategy;  // simulate
  std::optional<std::string> input;     // check
  std::optional<std::string> formula;   // check
  std::optional<std::size_t> runs;      // simulate
  std::optional<std::size_t> count;     // sweep
  unsigned jobs = 1;
};

/* command-line values replace the file's; re-validated */
void apply_overrides(RunConfig& cfg, const CommandOptions& opt);

struct ResolvedParams {
  AbstractionParams p;
  std::size_t dwell = 1;
  std::optional<double> T;
  bool scheduled = true;  // tau came from the parameter search
  bool margin_ok = false;
  bool budget_ok = false;
  double tau_star = 0.0;
  double r_star = 0.0;
  Delta2Requirement at_tau;
  bool certified() const { return margin_ok && budget_ok; }
};

/*
 * tau from the search (or the file), then T = N tau when a period T is
 * given, then eta = tau^2, mu = tau unless overridden.
 */
ResolvedParams resolve_parameters(const RunConfig& cfg);

struct SweepRow {
  double tau, eta, mu, delta2_min, eps_min;
};
std::vector<SweepRow> sweep_rows(double L, double M, double delta1, double tau_min, double tau_max,
                                 std::size_t count);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/* cells holding some point of the box (clipped to the grid's box) */
std::vector<std::size_t> initial_cells(const Grid& g, const Box& region);

struct SynthesisOutcome {
  ResolvedParams rp;
  FiniteAbstraction abs;
  LabellingSpec strengthened;
  std::vector<PropSet> labels;
  Formula nnf;
  FragmentSpec fragment;
  Strategy strategy;
  std::vector<std::size_t> initial;  // empty when no initial region is given
  std::vector<std::size_t> losing_initial;
  bool realizable = false;
};

/* parameters, abstraction, eps1-strengthening, cell labels, fixed point */
SynthesisOutcome run_synthesis(const RunConfig& cfg, unsigned jobs = 1);

struct RunRecord {
  std::size_t run = 0;
  Vec x0;
  bool refused = false;
  std::string refusal;
  ClosedLoopResult result;
};

struct BatchSettings {
  std::size_t runs = 10;
  std::uint64_t seed = 1;
  double delta = 0.0;
  std::size_t steps = 100;
  std::size_t substeps = 10;
  std::optional<Box> initial;
};

/* seeded closed-loop runs from random points of winning initial cells */
std::vector<RunRecord> simulate_batch(const SystemSpec& sys, const LabellingSpec& labels,
                                      const Formula& formula, const StrategyFile& sf,
                                      const BatchSettings& b);

int cmd_params(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out);
int cmd_abstract(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out);
int cmd_synth(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out);
/* 0 realizable, 1 not realizable */
int cmd_decide(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out);
/* 0 when every run is sat with no refusal and within the deviation bound */
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out);
/* 0 sat, 1 unsat, 3 unknown; cfg may be null for trace files */
int cmd_check(const RunConfig* cfg, const CommandOptions& opt, std::ostream& out);

}  // namespace certabs

#endif
