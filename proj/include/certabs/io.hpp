/*
 * io.hpp
 *
 * Strategy files (versioned JSON), trace files, trajectory CSV.
 */

#ifndef CERTABS_IO_HPP_
#define CERTABS_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "certabs/abstraction.hpp"
#include "certabs/logic.hpp"
#include "certabs/synthesis.hpp"

namespace certabs {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/* 17 significant digits */
std::string format_double(double v);

/*
 * Everything needed to run a strategy without rebuilding the abstraction:
 * the state grid, the action values and the sampling period.
 */
struct StrategyFile {
  static constexpr const char* kFormat = "certabs-strategy";

  Strategy strategy;
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;
  Box X;
  double eta = 0.0;
  Vec anchor;
  std::vector<std::int64_t> counts;
  std::vector<Vec> actions;
  AbstractionParams params;  // tau here is the sampling period of one step
  std::string config_hash;

  Grid grid() const;
};

StrategyFile make_strategy_file(const Strategy& s, const FiniteAbstraction& abs,
                                const std::string& config_hash);
std::string strategy_to_json(const StrategyFile& f);
StrategyFile strategy_from_json(const std::string& text);
void save_strategy(const std::string& path, const StrategyFile& f);
StrategyFile load_strategy(const std::string& path);
SampledController make_controller(const StrategyFile& f);

/*
 *   alphabet: p q r
 *   p
 *   p q
 *   -
 * one line per sampling instant, '-' is the empty set, '#' starts a comment
 */
void write_trace(std::ostream& out, const Trace& t);
Trace read_trace(std::istream& in);

/* header t,<states>,<controls>; the control is the one held from that sample on */
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::string>& state_names,
                          const std::vector<std::string>& control_names);
/* needs columns t and every state name; other columns are ignored */
Trajectory read_trajectory_csv(std::istream& in, const std::vector<std::string>& state_names);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace certabs

#endif
