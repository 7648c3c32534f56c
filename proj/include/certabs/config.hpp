/*
 * config.hpp
 *
 * Run configuration: one YAML file with system, labelling, objective,
 * parameters, simulation, sweep and output sections. See docs/config.md.
 */

#ifndef CERTABS_CONFIG_HPP_
#define CERTABS_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "certabs/labelling.hpp"
#include "certabs/logic.hpp"
#include "certabs/system.hpp"

namespace certabs {

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
  std::vector<std::string> errors_;
};

struct ParameterSettings {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double eps = 0.0;
  bool preserving = false;
  std::optional<double> T;
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<double> mu;
  std::optional<double> tau_star;
  std::size_t max_cells = 5'000'000;
};

struct SimulationSettings {
  std::uint64_t seed = 1;
  std::size_t runs = 10;
  std::size_t steps = 100;
  std::size_t substeps = 10;
  std::optional<double> delta;  // defaults to delta1
  std::optional<Box> initial;   // defaults to the objective's initial region
};

struct SweepSettings {
  double tau_min = 1e-3;
  double tau_max = 0.2;
  std::size_t count = 50;
};

struct RunConfig {
  std::string origin;
  std::uint64_t hash = 0;  // FNV-1a of the file text
  SystemSpec system;
  LabellingSpec labelling;
  ComplementMap complements;
  std::string formula_text;
  Formula formula;
  std::optional<Box> initial;
  ParameterSettings params;
  SimulationSettings sim;
  SweepSettings sweep;
  std::string out_dir = "out";
  std::vector<std::string> warnings;
};

/* parse and validate; ConfigError lists every problem found */
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/* parameter-level checks, also run after command-line overrides */
std::vector<std::string> validate_parameters(const RunConfig& cfg);

std::string hex64(std::uint64_t v);

}  // namespace certabs

#endif
