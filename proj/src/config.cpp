/*
 * config.cpp
 */

#include "certabs/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "certabs/hash.hpp"

namespace certabs {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string s = "invalid configuration:";
  for (const auto& e : errors) s += "\n  " + e;
  return s;
}

class Reader {
public:
  std::vector<std::string> errors;
  Environment env{{"pi", std::numbers::pi}};

  void keys(const YAML::Node& n, const std::string& path, std::set<std::string> allowed) {
    if (!n.IsMap()) {
      errors.push_back(path + ": expected a mapping");
      return;
    }
    for (const auto& kv : n) {
      auto k = kv.first.as<std::string>();
      if (!allowed.count(k)) errors.push_back(path + ": unknown key '" + k + "'");
    }
  }

  std::optional<double> number(const YAML::Node& n, const std::string& path) {
    if (!n || n.IsNull()) {
      errors.push_back(path + ": missing number");
      return std::nullopt;
    }
    if (!n.IsScalar()) {
      errors.push_back(path + ": expected a number");
      return std::nullopt;
    }
    auto text = n.as<std::string>();
    double v;
    if (YAML::convert<double>::decode(n, v) && std::isfinite(v)) return v;
    try {
      v = eval(parse_expression(text), env);
      if (std::isfinite(v)) return v;
      errors.push_back(path + ": '" + text + "' is not finite");
    } catch (const std::exception& e) {
      errors.push_back(path + ": '" + text + "' is not a number (" + e.what() + ")");
    }
    return std::nullopt;
  }

  std::optional<double> optional_number(const YAML::Node& n, const std::string& path) {
    if (!n || n.IsNull()) return std::nullopt;
    return number(n, path);
  }

  template <class T>
  std::optional<T> integer(const YAML::Node& n, const std::string& path) {
    T v{};
    if (n.IsScalar() && YAML::convert<T>::decode(n, v)) return v;
    errors.push_back(path + ": expected a non-negative integer");
    return std::nullopt;
  }

  std::optional<bool> flag(const YAML::Node& n, const std::string& path) {
    bool v{};
    if (n.IsScalar() && YAML::convert<bool>::decode(n, v)) return v;
    errors.push_back(path + ": expected true or false");
    return std::nullopt;
  }

  std::vector<std::string> names(const YAML::Node& n, const std::string& path) {
    std::vector<std::string> out;
    if (!n || !n.IsSequence()) {
      errors.push_back(path + ": expected a list of names");
      return out;
    }
    for (const auto& e : n) {
      if (!e.IsScalar()) {
        errors.push_back(path + ": expected a list of names");
        continue;
      }
      out.push_back(e.as<std::string>());
    }
    return out;
  }

  Vec vector(const YAML::Node& n, const std::string& path) {
    Vec out;
    if (!n || !n.IsSequence()) {
      errors.push_back(path + ": expected a list of numbers");
      return out;
    }
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(number(n[i], path + "[" + std::to_string(i) + "]").value_or(0.0));
    return out;
  }

  std::optional<Box> box(const YAML::Node& n, const std::string& path, std::size_t dim) {
    if (!n || !n.IsMap()) {
      errors.push_back(path + ": expected {lower: [...], upper: [...]}");
      return std::nullopt;
    }
    keys(n, path, {"lower", "upper"});
    Vec lo = vector(n["lower"], path + ".lower"), hi = vector(n["upper"], path + ".upper");
    if (lo.size() != dim || hi.size() != dim) {
      errors.push_back(path + ": expected " + std::to_string(dim) + " bounds per side, got " +
                       std::to_string(lo.size()) + " and " + std::to_string(hi.size()));
      return std::nullopt;
    }
    for (std::size_t i = 0; i < dim; ++i)
      if (!(lo[i] <= hi[i])) {
        errors.push_back(path + ": lower bound exceeds upper bound on axis " + std::to_string(i));
        return std::nullopt;
      }
    return Box(lo, hi);
  }

  std::optional<Expression> expression(const YAML::Node& n, const std::string& path) {
    if (!n || !n.IsScalar()) {
      errors.push_back(path + ": expected an expression string");
      return std::nullopt;
    }
    auto text = n.as<std::string>();
    try {
      return parse_expression(text);
    } catch (const ParseError& e) {
      errors.push_back(path + ": " + e.what());
    }
    return std::nullopt;
  }
};

void read_system(Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  const std::string p = "system";
  if (!n) {
    rd.errors.push_back("missing section 'system'");
    return;
  }
  rd.keys(n, p, {"states", "controls", "constants", "definitions", "dynamics", "X", "U",
                 "lipschitz", "bound", "norm"});
  if (!n.IsMap()) return;
  SystemSpec& s = cfg.system;
  s.state_names = rd.names(n["states"], p + ".states");
  s.control_names = rd.names(n["controls"], p + ".controls");
  bool pi_declared = false;
  if (auto c = n["constants"]) {
    if (!c.IsMap()) {
      rd.errors.push_back(p + ".constants: expected a mapping of name: value");
    } else {
      for (const auto& kv : c) {
        auto name = kv.first.as<std::string>();
        auto v = rd.number(kv.second, p + ".constants." + name);
        if (!v) continue;
        s.constants.emplace_back(name, *v);
        rd.env[name] = *v;
        pi_declared = pi_declared || name == "pi";
      }
    }
  }
  if (auto d = n["definitions"]) {
    if (!d.IsMap()) {
      rd.errors.push_back(p + ".definitions: expected a mapping of name: expression");
    } else {
      for (const auto& kv : d) {
        auto name = kv.first.as<std::string>();
        if (auto e = rd.expression(kv.second, p + ".definitions." + name)) s.definitions.emplace_back(name, *e);
      }
    }
  }
  if (auto f = n["dynamics"]; f && f.IsSequence()) {
    for (std::size_t i = 0; i < f.size(); ++i)
      if (auto e = rd.expression(f[i], p + ".dynamics[" + std::to_string(i) + "]")) s.f.push_back(*e);
  } else {
    rd.errors.push_back(p + ".dynamics: expected a list of expression strings");
  }
  /* pi is available to expressions unless the file declares its own */
  if (!pi_declared) {
    bool used = false;
    auto uses_pi = [](const Expression& e) {
      auto v = e.variables();
      return std::find(v.begin(), v.end(), "pi") != v.end();
    };
    for (const auto& e : s.f) used = used || uses_pi(e);
    for (const auto& d : s.definitions) used = used || uses_pi(d.second);
    if (used) s.constants.emplace_back("pi", std::numbers::pi);
  }
  auto X = rd.box(n["X"], p + ".X", s.n());
  auto U = rd.box(n["U"], p + ".U", s.m());
  if (X) s.X = *X;
  if (U) s.U = *U;
  if (auto L = rd.number(n["lipschitz"], p + ".lipschitz")) s.L = *L;
  if (auto M = rd.number(n["bound"], p + ".bound")) s.M = *M;
  if (auto nn = n["norm"]) {
    try {
      s.norm = parse_norm(nn.as<std::string>());
    } catch (const std::exception& e) {
      rd.errors.push_back(p + ".norm: " + e.what());
    }
  }
  for (auto& e : s.validate()) {
    if ((!X && e.starts_with("state box")) || (!U && e.starts_with("control box"))) continue;
    rd.errors.push_back(p + ": " + e);
  }
}

void read_labelling(Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  const std::string p = "labelling";
  std::vector<Proposition> props;
  if (!n) {
    rd.errors.push_back("missing section 'labelling'");
    return;
  }
  rd.keys(n, p, {"propositions", "complements"});
  if (!n.IsMap()) return;
  const std::size_t dim = cfg.system.n();
  auto pn = n["propositions"];
  if (!pn || !pn.IsMap()) {
    rd.errors.push_back(p + ".propositions: expected a mapping of name: list of boxes");
  } else {
    for (const auto& kv : pn) {
      Proposition prop{kv.first.as<std::string>(), {}};
      const std::string pp = p + ".propositions." + prop.name;
      const YAML::Node& boxes = kv.second;
      if (boxes.IsMap()) {
        if (auto b = rd.box(boxes, pp, dim)) prop.region.push_back(*b);
      } else if (boxes.IsSequence()) {
        for (std::size_t i = 0; i < boxes.size(); ++i)
          if (auto b = rd.box(boxes[i], pp + "[" + std::to_string(i) + "]", dim)) prop.region.push_back(*b);
      } else {
        rd.errors.push_back(pp + ": expected a box or a list of boxes");
      }
      props.push_back(std::move(prop));
    }
  }
  try {
    cfg.labelling = LabellingSpec(dim, std::move(props));
    if (cfg.system.X.dim() == dim)
      for (auto& w : cfg.labelling.clip_to(cfg.system.X)) cfg.warnings.push_back(w);
  } catch (const std::exception& e) {
    rd.errors.push_back(p + ": " + e.what());
  }
  if (auto c = n["complements"]) {
    if (!c.IsMap()) {
      rd.errors.push_back(p + ".complements: expected a mapping of name: name");
      return;
    }
    for (const auto& kv : c) {
      auto a = kv.first.as<std::string>(), b = kv.second.as<std::string>();
      for (const auto& name : {a, b})
        if (!cfg.labelling.index_of(name))
          rd.errors.push_back(p + ".complements: '" + name + "' is not a declared proposition");
      if (a == b) rd.errors.push_back(p + ".complements: '" + a + "' cannot complement itself");
      for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
        auto it = cfg.complements.find(x);
        if (it != cfg.complements.end() && it->second != y)
          rd.errors.push_back(p + ".complements: '" + x + "' has two complements");
        cfg.complements[x] = y;
      }
    }
  }
}

void read_objective(Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  const std::string p = "objective";
  if (!n) {
    rd.errors.push_back("missing section 'objective'");
    return;
  }
  rd.keys(n, p, {"formula", "initial"});
  if (!n.IsMap()) return;
  if (!n["formula"] || !n["formula"].IsScalar()) {
    rd.errors.push_back(p + ".formula: expected a formula string");
  } else {
    cfg.formula_text = n["formula"].as<std::string>();
    try {
      cfg.formula = parse_formula(cfg.formula_text);
      for (const auto& a : cfg.formula.atoms())
        if (!cfg.labelling.index_of(a))
          rd.errors.push_back(p + ".formula: unknown proposition '" + a + "'");
      try {
        to_nnf(cfg.formula, cfg.complements);
      } catch (const FormulaError& e) {
        rd.errors.push_back(p + ".formula: " + e.what());
      }
    } catch (const ParseError& e) {
      rd.errors.push_back(p + ".formula: " + e.what());
    }
  }
  if (n["initial"]) cfg.initial = rd.box(n["initial"], p + ".initial", cfg.system.n());
}

void read_parameters(Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  const std::string p = "parameters";
  if (!n) {
    rd.errors.push_back("missing section 'parameters'");
    return;
  }
  rd.keys(n, p, {"delta1", "delta2", "epsilon", "preserving", "T", "tau", "eta", "mu", "tau_star",
                 "max_cells"});
  if (!n.IsMap()) return;
  auto& ps = cfg.params;
  ps.delta1 = rd.number(n["delta1"], p + ".delta1").value_or(0.0);
  ps.delta2 = rd.number(n["delta2"], p + ".delta2").value_or(0.0);
  ps.eps = rd.number(n["epsilon"], p + ".epsilon").value_or(0.0);
  if (n["preserving"]) ps.preserving = rd.flag(n["preserving"], p + ".preserving").value_or(false);
  ps.T = rd.optional_number(n["T"], p + ".T");
  ps.tau = rd.optional_number(n["tau"], p + ".tau");
  ps.eta = rd.optional_number(n["eta"], p + ".eta");
  ps.mu = rd.optional_number(n["mu"], p + ".mu");
  ps.tau_star = rd.optional_number(n["tau_star"], p + ".tau_star");
  if (n["max_cells"]) ps.max_cells = rd.integer<std::size_t>(n["max_cells"], p + ".max_cells").value_or(0);
}

void read_simulation(Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  const std::string p = "simulation";
  if (!n) return;
  rd.keys(n, p, {"seed", "runs", "steps", "substeps", "delta", "initial"});
  if (!n.IsMap()) return;
  auto& s = cfg.sim;
  if (n["seed"]) s.seed = rd.integer<std::uint64_t>(n["seed"], p + ".seed").value_or(1);
  if (n["runs"]) s.runs = rd.integer<std::size_t>(n["runs"], p + ".runs").value_or(0);
  if (n["steps"]) s.steps = rd.integer<std::size_t>(n["steps"], p + ".steps").value_or(0);
  if (n["substeps"]) s.substeps = rd.integer<std::size_t>(n["substeps"], p + ".substeps").value_or(1);
  s.delta = rd.optional_number(n["delta"], p + ".delta");
  if (n["initial"]) s.initial = rd.box(n["initial"], p + ".initial", cfg.system.n());
}

void read_sweep(Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  const std::string p = "sweep";
  if (!n) return;
  rd.keys(n, p, {"tau_min", "tau_max", "count"});
  if (!n.IsMap()) return;
  if (n["tau_min"]) cfg.sweep.tau_min = rd.number(n["tau_min"], p + ".tau_min").value_or(0.0);
  if (n["tau_max"]) cfg.sweep.tau_max = rd.number(n["tau_max"], p + ".tau_max").value_or(0.0);
  if (n["count"]) cfg.sweep.count = rd.integer<std::size_t>(n["count"], p + ".count").value_or(0);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> validate_parameters(const RunConfig& cfg) {
  std::vector<std::string> errors;
  const auto& p = cfg.params;
  if (!(p.delta1 >= 0.0)) errors.push_back("parameters.delta1 must be >= 0");
  if (!(p.delta2 > p.delta1)) errors.push_back("parameters.delta2 must exceed delta1");
  if (!(p.eps > 0.0)) errors.push_back("parameters.epsilon must be > 0");
  auto positive = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0)) errors.push_back(std::string("parameters.") + name + " must be > 0");
  };
  positive(p.T, "T");
  positive(p.tau, "tau");
  positive(p.tau_star, "tau_star");
  if (p.eta && !(*p.eta >= 0.0)) errors.push_back("parameters.eta must be >= 0");
  if (p.mu && !(*p.mu >= 0.0)) errors.push_back("parameters.mu must be >= 0");
  if (p.T && p.tau && *p.tau > *p.T) errors.push_back("parameters.tau must not exceed T");
  if (p.max_cells == 0) errors.push_back("parameters.max_cells must be > 0");
  if (cfg.sim.substeps == 0) errors.push_back("simulation.substeps must be > 0");
  if (cfg.sim.delta && !(*cfg.sim.delta >= 0.0)) errors.push_back("simulation.delta must be >= 0");
  if (!(cfg.sweep.tau_min > 0.0) || !(cfg.sweep.tau_max >= cfg.sweep.tau_min))
    errors.push_back("sweep: need 0 < tau_min <= tau_max");
  if (cfg.sweep.count == 0) errors.push_back("sweep.count must be > 0");
  return errors;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.origin = origin;
  cfg.hash = fnv1a(text);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError({origin + ": " + e.what()});
  }
  if (!root.IsMap()) throw ConfigError({origin + ": expected a mapping at the top level"});
  Reader rd;
  try {
    rd.keys(root, "config", {"system", "labelling", "objective", "parameters", "simulation", "sweep", "output"});
    read_system(rd, root["system"], cfg);
    read_labelling(rd, root["labelling"], cfg);
    read_objective(rd, root["objective"], cfg);
    read_parameters(rd, root["parameters"], cfg);
    read_simulation(rd, root["simulation"], cfg);
    read_sweep(rd, root["sweep"], cfg);
    if (auto o = root["output"]) {
      rd.keys(o, "output", {"directory"});
      if (o.IsMap() && o["directory"]) cfg.out_dir = o["directory"].as<std::string>();
    }
  } catch (const YAML::Exception& e) {
    rd.errors.push_back(std::string("malformed entry: ") + e.what());
  }
  for (auto& e : validate_parameters(cfg)) rd.errors.push_back(e);
  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace certabs
