/*
 * commands.cpp
 */

#include "certabs/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace certabs {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string out_dir(const RunConfig& cfg, const CommandOptions& opt) {
  std::string d = opt.out_dir.value_or(cfg.out_dir);
  fs::create_directories(d);
  return d;
}

json params_json(const ResolvedParams& rp) {
  const auto& p = rp.p;
  json j = {{"tau", p.tau},
            {"eta", p.eta},
            {"mu", p.mu},
            {"delta1", p.delta1},
            {"delta2", p.delta2},
            {"epsilon", p.eps},
            {"eps1", p.eps1},
            {"eps2", p.eps2},
            {"r", p.r},
            {"margin_lhs", p.margin},
            {"margin_ok", rp.margin_ok},
            {"budget_ok", rp.budget_ok},
            {"preserving", p.preserving},
            {"dwell", rp.dwell},
            {"scheduled", rp.scheduled},
            {"tau_star", rp.tau_star},
            {"r_star", rp.r_star},
            {"delta2_min_at_tau", rp.at_tau.delta2_min},
            {"eps_min_at_tau", rp.at_tau.eps_min}};
  j["T"] = rp.T ? json(*rp.T) : json(nullptr);
  return j;
}

void write_manifest(const std::string& dir, const std::string& command, const RunConfig& cfg, json body) {
  body["command"] = command;
  body["config"] = cfg.origin;
  body["config_hash"] = hex64(cfg.hash);
  body["manifest_version"] = 1;
  write_file((fs::path(dir) / "manifest.json").string(), body.dump(2) + "\n");
}

void print_params(std::ostream& out, const ResolvedParams& rp) {
  const auto& p = rp.p;
  out << "tau        " << g6(p.tau) << (rp.scheduled ? "  (largest feasible under eta=tau^2, mu=tau)" : "  (given)")
      << "\n";
  if (rp.T) out << "T          " << g6(*rp.T) << "  = " << rp.dwell << " x tau (dwell " << rp.dwell << ")\n";
  out << "eta        " << g6(p.eta) << "\n"
      << "mu         " << g6(p.mu) << "\n"
      << "eps1       " << g6(p.eps1) << "\n"
      << "eps2       " << g6(p.eps2) << "\n"
      << "r          " << g6(p.r) << "\n"
      << "margin     " << g6(p.margin) << (rp.margin_ok ? " < " : " >= ") << "delta2 = " << g6(p.delta2)
      << (rp.margin_ok ? "  ok" : "  VIOLATED") << "\n"
      << "labelling  eps1+eps2 = " << g6(p.eps1 + p.eps2) << (rp.budget_ok ? " <= " : " > ")
      << "eps = " << g6(p.eps) << (rp.budget_ok ? "  ok" : "  VIOLATED") << "\n"
      << "delta2_min " << g6(rp.at_tau.delta2_min) << " at this tau (eps_min " << g6(rp.at_tau.eps_min)
      << ")\n"
      << "r_star     " << g6(rp.r_star) << " for tau_star = " << g6(rp.tau_star) << "\n";
}

}  // namespace

void apply_overrides(RunConfig& cfg, const CommandOptions& opt) {
  if (opt.tau) cfg.params.tau = opt.tau;
  if (opt.eta) cfg.params.eta = opt.eta;
  if (opt.mu) cfg.params.mu = opt.mu;
  if (opt.seed) cfg.sim.seed = *opt.seed;
  if (opt.runs) cfg.sim.runs = *opt.runs;
  if (opt.count) cfg.sweep.count = *opt.count;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  auto errors = validate_parameters(cfg);
  if (!errors.empty()) throw ConfigError(errors);
}

ResolvedParams resolve_parameters(const RunConfig& cfg) {
  const auto& ps = cfg.params;
  const double L = cfg.system.L, M = cfg.system.M;
  ResolvedParams rp;
  double tau;
  if (ps.tau) {
    tau = *ps.tau;
    rp.scheduled = false;
  } else {
    tau = choose_parameters(L, M, ps.delta1, ps.delta2, ps.eps, ps.preserving).tau;
  }
  if (ps.T) {
    rp.T = ps.T;
    rp.dwell = static_cast<std::size_t>(std::ceil(*ps.T / tau - 1e-9));
    rp.dwell = std::max<std::size_t>(rp.dwell, 1);
    tau = *ps.T / static_cast<double>(rp.dwell);
  }
  const double eta = ps.eta.value_or(tau * tau);
  const double mu = ps.mu.value_or(tau);
  rp.p = make_params(L, M, tau, eta, mu, ps.delta1, ps.delta2, ps.eps, ps.preserving);
  rp.margin_ok = margin_holds(rp.p);
  rp.budget_ok = labelling_budget_holds(rp.p);
  rp.tau_star = ps.tau_star.value_or(ps.T.value_or(tau));
  rp.r_star = dwell_mismatch_bound(rp.tau_star, ps.delta1, ps.delta2);
  rp.at_tau = min_delta2_for_tau(L, M, tau, ps.delta1);
  return rp;
}

std::vector<SweepRow> sweep_rows(double L, double M, double delta1, double tau_min, double tau_max,
                                 std::size_t count) {
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < count; ++i) {
    double tau = count == 1 ? tau_min
                            : tau_min * std::pow(tau_max / tau_min, static_cast<double>(i) / (count - 1));
    if (i + 1 == count && count > 1) tau = tau_max;
    auto req = min_delta2_for_tau(L, M, tau, delta1);
    rows.push_back({tau, tau * tau, tau, req.delta2_min, req.eps_min});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "tau,eta,mu,delta2_min,eps_min\n";
  for (const auto& r : rows)
    out << format_double(r.tau) << ',' << format_double(r.eta) << ',' << format_double(r.mu) << ','
        << format_double(r.delta2_min) << ',' << format_double(r.eps_min) << '\n';
}

std::vector<std::size_t> initial_cells(const Grid& g, const Box& region) {
  auto clipped = intersect(region, g.covered());
  if (!clipped) throw DomainError("initial region " + to_string(region) + " misses the state box");
  MultiIndex lo = g.cell_index(clipped->lower), hi = g.cell_index(clipped->upper);
  std::vector<std::size_t> out;
  for_each_cell(g, IndexRange{lo, hi}, [&](std::size_t id) { out.push_back(id); });
  return out;
}

SynthesisOutcome run_synthesis(const RunConfig& cfg, unsigned jobs) {
  SynthesisOutcome o;
  o.rp = resolve_parameters(cfg);
  o.abs = build_abstraction(cfg.system, o.rp.p, BuildOptions{cfg.params.max_cells, jobs});
  o.strengthened = strengthen(cfg.labelling, o.rp.p.eps1);
  o.labels = cell_label(o.strengthened, o.abs.states(), jobs);
  o.nnf = to_nnf(cfg.formula, cfg.complements);
  o.fragment = classify(o.nnf);
  const auto alphabet = cfg.labelling.names();
  Objective obj;
  obj.kind = o.fragment.kind;
  obj.constraint = cell_predicate(o.fragment.constraint, o.labels, alphabet);
  if (obj.kind != ObjectiveKind::invariance) obj.target = cell_predicate(o.fragment.target, o.labels, alphabet);
  AbstractionGame game(o.abs);
  o.strategy = synthesize(game, obj, o.rp.dwell);
  o.strategy.formula = cfg.formula_text;
  if (cfg.initial) {
    o.initial = initial_cells(o.abs.states(), *cfg.initial);
    for (auto q : o.initial)
      if (!o.strategy.winning[q]) o.losing_initial.push_back(q);
    o.realizable = o.losing_initial.empty();
  } else {
    o.realizable = !o.strategy.empty();
  }
  return o;
}

std::vector<RunRecord> simulate_batch(const SystemSpec& sys, const LabellingSpec& labels,
                                      const Formula& formula, const StrategyFile& sf,
                                      const BatchSettings& b) {
  std::vector<RunRecord> out;
  if (b.runs == 0) return out;
  const Grid grid = sf.grid();
  const Strategy& s = sf.strategy;
  std::vector<std::size_t> start;
  if (b.initial) {
    for (auto q : initial_cells(grid, *b.initial))
      if (s.winning[q]) start.push_back(q);
  } else {
    for (std::size_t q = 0; q < s.num_states; ++q)
      if (s.winning[q]) start.push_back(q);
  }
  if (start.empty()) throw ControllerRefusal("no winning cell to start from");
  const VectorField field(sys);
  DisturbanceSource sampler(b.seed);
  ClosedLoopOptions opt{sf.params.tau, b.delta, b.steps, b.substeps};
  for (std::size_t k = 0; k < b.runs; ++k) {
    RunRecord rec;
    rec.run = k;
    auto pick = std::min(start.size() - 1, static_cast<std::size_t>(sampler.uniform01() * start.size()));
    const std::size_t cell = start[pick];
    Box box = grid.cell_box(cell);
    if (auto c = intersect(box, grid.covered())) box = *c;
    if (b.initial)
      if (auto c = intersect(box, *b.initial)) box = *c;
    Vec x0(box.dim());
    for (std::size_t i = 0; i < box.dim(); ++i)
      x0[i] = box.lower[i] + sampler.uniform01() * (box.upper[i] - box.lower[i]);
    if (grid.cell_id(x0) != cell) x0 = grid.cell_center(cell);
    rec.x0 = x0;
    SampledController ctrl = make_controller(sf);
    DisturbanceSource noise(b.seed + 0x9E3779B97F4A7C15ULL * (k + 1));
    try {
      rec.result = closed_loop_run(sys, field, ctrl, labels, formula, x0, opt, noise);
    } catch (const ControllerRefusal& e) {
      rec.refused = true;
      rec.refusal = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

int cmd_params(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  ResolvedParams rp = resolve_parameters(cfg);
  print_params(out, rp);
  for (const auto& w : spot_check_constants(cfg.system, 2000, cfg.sim.seed)) out << "warning: " << w << "\n";
  write_manifest(out_dir(cfg, opt), "params", cfg, {{"params", params_json(rp)}});
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  const auto& sw = cfg.sweep;
  auto rows = sweep_rows(cfg.system.L, cfg.system.M, cfg.params.delta1, sw.tau_min, sw.tau_max, sw.count);
  const std::string dir = out_dir(cfg, opt);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_file((fs::path(dir) / "sweep.csv").string(), csv.str());
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].delta2_min > rows[i - 1].delta2_min;
  out << "rows       " << rows.size() << " (tau from " << g6(sw.tau_min) << " to " << g6(sw.tau_max)
      << ", eta = tau^2, mu = tau, delta1 = " << g6(cfg.params.delta1) << ")\n"
      << "delta2_min " << (monotone ? "strictly increasing in tau" : "NOT monotone") << "\n"
      << "at tau     " << g6(rows.back().tau) << ": delta2_min = " << g6(rows.back().delta2_min)
      << ", eps_min = " << g6(rows.back().eps_min) << "\n";
  if (sw.tau_min <= 0.2 && 0.2 <= sw.tau_max) {
    auto r = min_delta2_for_tau(cfg.system.L, cfg.system.M, 0.2, cfg.params.delta1);
    out << "note       at tau = 0.2 this schedule needs delta2 >= " << g6(r.delta2_min) << " and eps >= "
        << g6(r.eps_min) << "; the point (tau=0.2, delta=0.1, eps=0.02) is not reached by eta = tau^2, mu = tau\n";
  }
  out << "csv        " << (fs::path(dir) / "sweep.csv").string() << "\n";
  write_manifest(dir, "sweep", cfg,
                 {{"sweep", {{"tau_min", sw.tau_min}, {"tau_max", sw.tau_max}, {"count", sw.count},
                             {"monotone", monotone}}}});
  return 0;
}

int cmd_abstract(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  ResolvedParams rp = resolve_parameters(cfg);
  FiniteAbstraction abs = build_abstraction(cfg.system, rp.p, BuildOptions{cfg.params.max_cells, opt.jobs});
  print_params(out, rp);
  std::string shape;
  for (auto c : abs.states().counts()) shape += (shape.empty() ? "" : " x ") + std::to_string(c);
  out << "states     " << abs.num_states() << " (" << shape << ")\n"
      << "actions    " << abs.num_actions() << "\n"
      << "blocked    " << abs.blocked_count() << " of " << abs.num_states() * abs.num_actions() << " pairs\n"
      << "relation   " << hex64(abs.relation_hash()) << "\n";
  write_manifest(out_dir(cfg, opt), "abstract", cfg,
                 {{"params", params_json(rp)},
                  {"abstraction",
                   {{"states", abs.num_states()},
                    {"counts", abs.states().counts()},
                    {"actions", abs.num_actions()},
                    {"control_counts", abs.controls().counts()},
                    {"blocked_pairs", abs.blocked_count()},
                    {"relation_hash", hex64(abs.relation_hash())}}}});
  return 0;
}

namespace {

json outcome_json(const SynthesisOutcome& o) {
  return {{"params", params_json(o.rp)},
          {"abstraction",
           {{"states", o.abs.num_states()},
            {"counts", o.abs.states().counts()},
            {"actions", o.abs.num_actions()},
            {"blocked_pairs", o.abs.blocked_count()}}},
          {"synthesis",
           {{"objective", objective_name(o.strategy.kind)},
            {"nnf", o.nnf.to_string()},
            {"winning_cells", o.strategy.winning_count()},
            {"iterations", o.strategy.iterations},
            {"initial_cells", o.initial.size()},
            {"losing_initial_cells", o.losing_initial.size()}}}};
}

void print_outcome(std::ostream& out, const SynthesisOutcome& o) {
  out << "objective  " << objective_name(o.strategy.kind) << ": " << o.nnf.to_string() << "\n"
      << "states     " << o.abs.num_states() << ", actions " << o.abs.num_actions() << ", blocked pairs "
      << o.abs.blocked_count() << "\n"
      << "winning    " << o.strategy.winning_count() << " cells after " << o.strategy.iterations
      << " rounds\n";
  if (!o.initial.empty())
    out << "initial    " << o.initial.size() << " cells, " << o.losing_initial.size() << " losing\n";
}

}  // namespace

int cmd_synth(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  SynthesisOutcome o = run_synthesis(cfg, opt.jobs);
  print_params(out, o.rp);
  print_outcome(out, o);
  const std::string dir = out_dir(cfg, opt);
  const std::string path = (fs::path(dir) / "strategy.json").string();
  save_strategy(path, make_strategy_file(o.strategy, o.abs, hex64(cfg.hash)));
  if (o.strategy.empty()) out << "unrealizable at this abstraction (empty winning set)\n";
  out << "strategy   " << path << "\n";
  write_manifest(dir, "synth", cfg, outcome_json(o));
  return 0;
}

int cmd_decide(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  SynthesisOutcome o = run_synthesis(cfg, opt.jobs);
  print_params(out, o.rp);
  print_outcome(out, o);
  const std::string dir = out_dir(cfg, opt);
  json body = outcome_json(o);
  body["realizable"] = o.realizable;
  body["certified"] = o.rp.certified();
  if (o.realizable) {
    const std::string path = (fs::path(dir) / "strategy.json").string();
    save_strategy(path, make_strategy_file(o.strategy, o.abs, hex64(cfg.hash)));
    out << "verdict    (phi, L) realizable for S_delta1 (delta1 = " << g6(o.rp.p.delta1) << ")\n"
        << "strategy   " << path << "\n";
    body["verdict"] = "realizable";
  } else {
    out << "verdict    (phi, L_eps) not realizable for S_delta2 (delta2 = " << g6(o.rp.p.delta2)
        << ") at this certified abstraction\n";
    if (!o.rp.certified())
      out << "caution    the margin or labelling inequality fails for these parameters, so this negative "
             "verdict is NOT certified\n";
    json losing = json::array();
    for (std::size_t i = 0; i < o.losing_initial.size(); ++i) {
      const std::size_t q = o.losing_initial[i];
      Box b = o.abs.states().cell_box(q);
      if (i < 10) out << "losing     cell " << q << " " << to_string(b) << "\n";
      losing.push_back(q);
    }
    if (o.losing_initial.size() > 10) out << "losing     ... " << o.losing_initial.size() - 10 << " more\n";
    if (o.initial.empty()) out << "losing     every cell (the winning set is empty)\n";
    body["verdict"] = "not realizable";
    body["losing_initial"] = losing;
  }
  write_manifest(dir, "decide", cfg, body);
  return o.realizable ? 0 : 1;
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  const std::string dir = out_dir(cfg, opt);
  const std::string spath = opt.strategy.value_or((fs::path(dir) / "strategy.json").string());
  StrategyFile sf = load_strategy(spath);
  if (sf.config_hash != hex64(cfg.hash))
    out << "warning: strategy " << spath << " was synthesized from a different config\n";
  if (sf.state_names != cfg.system.state_names)
    throw IoError("strategy state names do not match the config");
  BatchSettings b;
  b.runs = cfg.sim.runs;
  b.seed = cfg.sim.seed;
  b.delta = cfg.sim.delta.value_or(cfg.params.delta1);
  b.steps = cfg.sim.steps;
  b.substeps = cfg.sim.substeps;
  b.initial = cfg.sim.initial ? cfg.sim.initial : cfg.initial;
  if (b.delta > sf.params.delta1)
    out << "warning: simulating with delta = " << g6(b.delta) << " above the synthesis delta1 = "
        << g6(sf.params.delta1) << "\n";
  auto runs = simulate_batch(cfg.system, cfg.labelling, cfg.formula, sf, b);

  const fs::path rdir = fs::path(dir) / "runs";
  fs::create_directories(rdir);
  std::ostringstream table;
  table << "run";
  for (const auto& s : cfg.system.state_names) table << ",x0_" << s;
  table << ",periods,discharged,exited,refused,discrete,continuous,max_deviation,bound\n";
  std::size_t sat = 0, csat = 0, refused = 0, over = 0;
  for (const auto& r : runs) {
    const auto& res = r.result;
    table << r.run;
    for (double v : r.x0) table << ',' << format_double(v);
    table << ',' << res.controls.size() << ',' << res.discharged << ',' << res.exited << ',' << r.refused << ','
          << (r.refused ? "-" : verdict_name(res.discrete)) << ','
          << (r.refused ? "-" : verdict_name(res.continuous)) << ',' << format_double(res.max_deviation) << ','
          << format_double(res.deviation_bound) << '\n';
    if (r.refused) {
      ++refused;
      out << "refusal    run " << r.run << ": " << r.refusal << "\n";
      continue;
    }
    sat += res.discrete == Verdict::sat;
    csat += res.continuous == Verdict::sat;
    over += res.max_deviation > res.deviation_bound + 1e-6;
    std::ostringstream traj, trace;
    write_trajectory_csv(traj, res.traj, cfg.system.state_names, cfg.system.control_names);
    write_trace(trace, res.trace);
    write_file((rdir / ("traj_" + std::to_string(r.run) + ".csv")).string(), traj.str());
    write_file((rdir / ("trace_" + std::to_string(r.run) + ".txt")).string(), trace.str());
  }
  write_file((fs::path(dir) / "runs.csv").string(), table.str());
  out << "runs       " << runs.size() << " (seed " << b.seed << ", delta " << g6(b.delta) << ")\n"
      << "discrete   " << sat << " sat\n"
      << "continuous " << csat << " sat\n"
      << "refusals   " << refused << "\n"
      << "deviation  " << over << " runs above (M+delta)tau/2\n"
      << "table      " << (fs::path(dir) / "runs.csv").string() << "\n";
  write_manifest(dir, "simulate", cfg,
                 {{"simulation",
                   {{"runs", runs.size()}, {"seed", b.seed}, {"delta", b.delta}, {"steps", b.steps},
                    {"substeps", b.substeps}, {"strategy", spath}, {"discrete_sat", sat},
                    {"continuous_sat", csat}, {"refusals", refused}, {"deviation_violations", over}}}});
  return (sat == runs.size() && refused == 0 && over == 0) ? 0 : 1;
}

int cmd_check(const RunConfig* cfg, const CommandOptions& opt, std::ostream& out) {
  if (!opt.input) throw std::invalid_argument("check needs --input <trace or trajectory file>");
  std::string text = opt.formula ? *opt.formula : cfg ? cfg->formula_text : "";
  if (text.empty()) throw std::invalid_argument("check needs --formula or a config with an objective");
  Formula f = parse_formula(text);
  Verdict v;
  const std::string& path = *opt.input;
  if (fs::path(path).extension() == ".csv") {
    if (!cfg) throw std::invalid_argument("checking a trajectory needs --config for the labelling");
    for (const auto& a : f.atoms())
      if (!cfg->labelling.index_of(a)) throw FormulaError("unknown proposition '" + a + "'");
    std::istringstream in(read_file(path));
    Trajectory traj = read_trajectory_csv(in, cfg->system.state_names);
    v = check_continuous(traj, cfg->labelling, f);
    out << "mode       continuous, piecewise-linear between " << traj.size() << " samples\n";
  } else {
    std::istringstream in(read_file(path));
    Trace t = read_trace(in);
    v = check_discrete(t, f);
    out << "mode       discrete, " << t.steps.size() << " positions\n";
  }
  out << "formula    " << f.to_string() << "\n"
      << "verdict    " << verdict_name(v) << "\n"
      << "convention finite trace: U needs a witness inside the trace, R and G only constrain the "
         "positions present\n";
  return v == Verdict::sat ? 0 : v == Verdict::unsat ? 1 : 3;
}

}  // namespace certabs
