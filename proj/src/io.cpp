/*
 * io.cpp
 */

#include "certabs/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace certabs {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Grid StrategyFile::grid() const {
  Grid g(X, eta, anchor);
  if (g.counts() != counts) throw IoError("strategy grid does not reproduce its recorded shape");
  return g;
}

StrategyFile make_strategy_file(const Strategy& s, const FiniteAbstraction& abs,
                                const std::string& config_hash) {
  StrategyFile f;
  f.strategy = s;
  f.state_names = abs.system().state_names;
  f.control_names = abs.system().control_names;
  f.X = abs.states().covered();
  f.eta = abs.states().eta();
  f.anchor = abs.states().anchor();
  f.counts = abs.states().counts();
  f.actions = abs.actions();
  f.params = abs.params();
  f.config_hash = config_hash;
  return f;
}

namespace {

std::string pack_bits(const CellSet& bits) {
  static const char* hex = "0123456789abcdef";
  std::string out((bits.size() + 3) / 4, '0');
  for (std::size_t c = 0; c < out.size(); ++c) {
    int v = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      std::size_t i = c * 4 + b;
      if (i < bits.size() && bits[i]) v |= 1 << b;
    }
    out[c] = hex[v];
  }
  return out;
}

CellSet unpack_bits(const std::string& s, std::size_t n) {
  if (s.size() != (n + 3) / 4) throw IoError("winning bitmap has the wrong length");
  CellSet out(n, 0);
  for (std::size_t c = 0; c < s.size(); ++c) {
    char ch = s[c];
    int v = ch >= '0' && ch <= '9' ? ch - '0' : ch >= 'a' && ch <= 'f' ? ch - 'a' + 10 : -1;
    if (v < 0) throw IoError("winning bitmap is not hexadecimal");
    for (std::size_t b = 0; b < 4; ++b) {
      std::size_t i = c * 4 + b;
      if (i < n) out[i] = (v >> b) & 1;
    }
  }
  return out;
}

ObjectiveKind parse_kind(const std::string& s) {
  for (auto k : {ObjectiveKind::invariance, ObjectiveKind::reachability, ObjectiveKind::until})
    if (s == objective_name(k)) return k;
  throw IoError("unknown objective kind '" + s + "'");
}

}  // namespace

std::string strategy_to_json(const StrategyFile& f) {
  const Strategy& s = f.strategy;
  json j;
  j["format"] = StrategyFile::kFormat;
  j["version"] = Strategy::kVersion;
  j["config_hash"] = f.config_hash;
  j["objective"] = {{"kind", objective_name(s.kind)}, {"formula", s.formula}};
  j["dwell"] = s.dwell;
  j["states"] = f.state_names;
  j["controls"] = f.control_names;
  j["grid"] = {{"lower", f.X.lower}, {"upper", f.X.upper}, {"eta", f.eta}, {"anchor", f.anchor},
               {"counts", f.counts}};
  j["actions"] = f.actions;
  const auto& p = f.params;
  j["params"] = {{"tau", p.tau},       {"eta", p.eta},       {"mu", p.mu},
                 {"delta1", p.delta1}, {"delta2", p.delta2}, {"epsilon", p.eps},
                 {"eps1", p.eps1},     {"eps2", p.eps2},     {"r", p.r},
                 {"margin", p.margin}, {"preserving", p.preserving}};
  j["num_states"] = s.num_states;
  j["num_actions"] = s.num_actions;
  j["iterations"] = s.iterations;
  j["winning"] = pack_bits(s.winning);
  j["action"] = s.action;
  return j.dump(1) + "\n";
}

StrategyFile strategy_from_json(const std::string& text) {
  StrategyFile f;
  try {
    json j = json::parse(text);
    if (j.at("format") != StrategyFile::kFormat) throw IoError("not a strategy file");
    if (j.at("version") != Strategy::kVersion)
      throw IoError("unsupported strategy version " + j.at("version").dump());
    Strategy& s = f.strategy;
    s.kind = parse_kind(j.at("objective").at("kind"));
    s.formula = j.at("objective").at("formula");
    s.dwell = j.at("dwell");
    s.num_states = j.at("num_states");
    s.num_actions = j.at("num_actions");
    s.iterations = j.at("iterations");
    s.winning = unpack_bits(j.at("winning"), s.num_states);
    s.action = j.at("action").get<std::vector<std::int32_t>>();
    if (s.action.size() != s.num_states) throw IoError("action table has the wrong length");
    if (s.dwell < 1) throw IoError("dwell must be >= 1");
    f.config_hash = j.at("config_hash");
    f.state_names = j.at("states").get<std::vector<std::string>>();
    f.control_names = j.at("controls").get<std::vector<std::string>>();
    const json& g = j.at("grid");
    f.X = Box(g.at("lower").get<Vec>(), g.at("upper").get<Vec>());
    f.eta = g.at("eta");
    f.anchor = g.at("anchor").get<Vec>();
    f.counts = g.at("counts").get<std::vector<std::int64_t>>();
    f.actions = j.at("actions").get<std::vector<Vec>>();
    if (f.actions.size() != s.num_actions) throw IoError("action list has the wrong length");
    for (auto a : s.action)
      if (a >= static_cast<std::int32_t>(s.num_actions) || a < Strategy::kDischarged)
        throw IoError("action table entry out of range");
    const json& p = j.at("params");
    auto& ps = f.params;
    ps.tau = p.at("tau");
    ps.eta = p.at("eta");
    ps.mu = p.at("mu");
    ps.delta1 = p.at("delta1");
    ps.delta2 = p.at("delta2");
    ps.eps = p.at("epsilon");
    ps.eps1 = p.at("eps1");
    ps.eps2 = p.at("eps2");
    ps.r = p.at("r");
    ps.margin = p.at("margin");
    ps.preserving = p.at("preserving");
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed strategy file: ") + e.what());
  }
  return f;
}

void save_strategy(const std::string& path, const StrategyFile& f) { write_file(path, strategy_to_json(f)); }

StrategyFile load_strategy(const std::string& path) { return strategy_from_json(read_file(path)); }

SampledController make_controller(const StrategyFile& f) {
  return SampledController(f.strategy, f.grid(), f.actions);
}

void write_trace(std::ostream& out, const Trace& t) {
  out << "alphabet:";
  for (const auto& a : t.alphabet) out << ' ' << a;
  out << '\n';
  for (PropSet s : t.steps) {
    bool any = false;
    for (std::size_t i = 0; i < t.alphabet.size(); ++i)
      if (s.contains(i)) {
        out << (any ? " " : "") << t.alphabet[i];
        any = true;
      }
    out << (any ? "" : "-") << '\n';
  }
}

Trace read_trace(std::istream& in) {
  Trace t;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    std::string word;
    std::vector<std::string> words;
    while (ss >> word) words.push_back(word);
    if (words.empty()) continue;
    if (!header) {
      if (words[0] != "alphabet:") throw IoError("trace line " + std::to_string(lineno) + ": expected 'alphabet:'");
      t.alphabet.assign(words.begin() + 1, words.end());
      if (t.alphabet.size() > PropSet::kMaxProps) throw IoError("trace alphabet exceeds 64 names");
      header = true;
      continue;
    }
    PropSet s;
    if (!(words.size() == 1 && words[0] == "-")) {
      for (const auto& w : words) {
        auto it = std::find(t.alphabet.begin(), t.alphabet.end(), w);
        if (it == t.alphabet.end())
          throw IoError("trace line " + std::to_string(lineno) + ": unknown proposition '" + w + "'");
        s.insert(static_cast<std::size_t>(it - t.alphabet.begin()));
      }
    }
    t.steps.push_back(s);
  }
  if (!header) throw IoError("trace file has no 'alphabet:' line");
  return t;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::string>& state_names,
                          const std::vector<std::string>& control_names) {
  out << 't';
  for (const auto& s : state_names) out << ',' << s;
  for (const auto& c : control_names) out << ',' << c;
  out << '\n';
  std::size_t seg = 0;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    while (seg + 1 < traj.segment_start.size() && traj.segment_start[seg + 1] <= i) ++seg;
    out << format_double(traj.t[i]);
    for (double v : traj.x[i]) out << ',' << format_double(v);
    for (std::size_t k = 0; k < control_names.size(); ++k)
      out << ',' << (seg < traj.controls.size() ? format_double(traj.controls[seg][k]) : "");
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in, const std::vector<std::string>& state_names) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("trajectory file is empty");
  auto header = split_csv(line);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("trajectory file has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t tc = column("t");
  std::vector<std::size_t> xc;
  for (const auto& s : state_names) xc.push_back(column(s));
  Trajectory traj;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    auto num = [&](std::size_t c) {
      if (c >= cells.size()) throw IoError("trajectory line " + std::to_string(lineno) + ": missing column");
      char* end = nullptr;
      double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0')
        throw IoError("trajectory line " + std::to_string(lineno) + ": '" + cells[c] + "' is not a number");
      return v;
    };
    traj.t.push_back(num(tc));
    Vec x;
    for (std::size_t c : xc) x.push_back(num(c));
    traj.x.push_back(std::move(x));
  }
  if (traj.t.empty()) throw IoError("trajectory file has no samples");
  if (traj.t.size() > 1) traj.h = traj.t[1] - traj.t[0];
  return traj;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace certabs
