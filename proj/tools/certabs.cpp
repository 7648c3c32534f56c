/*
 * certabs: command-line front end.
 *
 *   certabs params|sweep|abstract|synth|simulate|check|decide --config <file>
 *           [--tau --eta --mu --seed --jobs --out]
 *
 * Exit codes: decide 0 realizable / 1 not realizable; check 0 sat /
 * 1 unsat / 3 unknown; simulate 1 when some run fails; 2 on any error.
 */

#include <iostream>

#include "CLI11.hpp"
#include "certabs/commands.hpp"

using namespace certabs;

int main(int argc, char** argv) {
  CLI::App app{"finite abstractions, synthesis and validation for sampled-data control"};
  app.require_subcommand(1, 1);

  std::string config;
  CommandOptions opt;
  double tau = 0, eta = 0, mu = 0;
  std::uint64_t seed = 0;
  std::string out, strategy, input, formula;
  std::size_t runs = 0, count = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config, "run configuration (YAML)");
    if (config_required) c->required();
    sub->add_option("--tau", tau, "sampling period override");
    sub->add_option("--eta", eta, "state grid width override");
    sub->add_option("--mu", mu, "control grid width override");
    sub->add_option("--seed", seed, "simulation seed override");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory override");
  };

  auto* params = app.add_subcommand("params", "choose discretization parameters");
  auto* sweep = app.add_subcommand("sweep", "tabulate delta2_min and eps_min over tau");
  auto* abstract = app.add_subcommand("abstract", "build the finite abstraction");
  auto* synth = app.add_subcommand("synth", "synthesize and write a strategy");
  auto* simulate = app.add_subcommand("simulate", "closed-loop runs of a strategy");
  auto* check = app.add_subcommand("check", "monitor a trace or trajectory file");
  auto* decide = app.add_subcommand("decide", "robust realizability decision");
  for (auto* s : {params, sweep, abstract, synth, simulate, decide}) add_common(s, true);
  add_common(check, false);
  sweep->add_option("--count", count, "number of tau values");
  simulate->add_option("--strategy", strategy, "strategy file (default <out>/strategy.json)");
  simulate->add_option("--runs", runs, "number of runs");
  check->add_option("--input", input, "trace file, or trajectory CSV")->required();
  check->add_option("--formula", formula, "formula (default: the config objective)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--tau")) opt.tau = tau;
  if (sub->count("--eta")) opt.eta = eta;
  if (sub->count("--mu")) opt.mu = mu;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--out")) opt.out_dir = out;
  if (!strategy.empty()) opt.strategy = strategy;
  if (!input.empty()) opt.input = input;
  if (!formula.empty()) opt.formula = formula;
  if (simulate->count("--runs")) opt.runs = runs;
  if (sweep->count("--count")) opt.count = count;

  try {
    std::optional<RunConfig> cfg;
    if (!config.empty()) {
      cfg = load_config(config);
      apply_overrides(*cfg, opt);
      for (const auto& w : cfg->warnings) std::cerr << "warning: " << w << "\n";
    }
    const std::string name = sub->get_name();
    if (name == "check") return cmd_check(cfg ? &*cfg : nullptr, opt, std::cout);
    if (name == "params") return cmd_params(*cfg, opt, std::cout);
    if (name == "sweep") return cmd_sweep(*cfg, opt, std::cout);
    if (name == "abstract") return cmd_abstract(*cfg, opt, std::cout);
    if (name == "synth") return cmd_synth(*cfg, opt, std::cout);
    if (name == "simulate") return cmd_simulate(*cfg, opt, std::cout);
    if (name == "decide") return cmd_decide(*cfg, opt, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid configuration\n";
    for (const auto& m : e.errors()) std::cerr << "  " << m << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
