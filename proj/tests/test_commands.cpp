#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "certabs/commands.hpp"
#include "certabs/hash.hpp"
#include "json.hpp"

using namespace certabs;
namespace fs = std::filesystem;

namespace {

const char* kIntegrator = R"yaml(
system:
  states: [x]
  controls: [u]
  dynamics: ["u"]
  X: {lower: [0], upper: [1]}
  U: {lower: [-1], upper: [1]}
  lipschitz: 1
  bound: 1
labelling:
  propositions:
    safe: {lower: [0.2], upper: [0.8]}
    spot: {lower: [0.5], upper: [0.52]}
objective:
  formula: "G safe"
  initial: {lower: [0.4], upper: [0.6]}
parameters:
  delta1: 0
  delta2: 0.5
  epsilon: 0.1
simulation:
  seed: 4
  runs: 100
)yaml";

const char* kCar = R"yaml(
system:
  states: [x, y, theta]
  controls: [v, phi]
  constants: {a: 0.5, b: 1}
  definitions:
    alpha: "atan(a*tan(phi)/b)"
  dynamics:
    - "v*cos(alpha + theta)/cos(alpha)"
    - "v*sin(alpha + theta)/cos(alpha)"
    - "v*tan(phi)"
  X: {lower: [0, 0, -pi], upper: [10, 10, pi]}
  U: {lower: [-1, -1], upper: [1, 1]}
  lipschitz: 1.2674
  bound: 1.5574
labelling:
  propositions:
    goal: {lower: [7, 7, -pi], upper: [9, 9, pi]}
objective:
  formula: "F goal"
parameters:
  delta1: 0
  delta2: 0.1
  epsilon: 0.05
)yaml";

std::string replaced(std::string s, const std::string& from, const std::string& to) {
  auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("certabs_cmd_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  CommandOptions opt() const {
    CommandOptions o;
    o.out_dir = dir.string();
    return o;
  }
  std::string file(const std::string& name, const std::string& text) const {
    auto p = (dir / name).string();
    write_file(p, text);
    return p;
  }
};

nlohmann::json manifest(const Scratch& s) { return nlohmann::json::parse(read_file((s.dir / "manifest.json").string())); }

}  // namespace

TEST_CASE("params for the car") {
  Scratch s("params");
  RunConfig cfg = parse_config(kCar);
  std::ostringstream out;
  CHECK(cmd_params(cfg, s.opt(), out) == 0);
  ResolvedParams rp = resolve_parameters(cfg);
  CHECK(rp.p.margin < 0.1);
  CHECK(rp.p.eps1 + rp.p.eps2 <= 0.05);
  CHECK(rp.certified());
  auto req = min_delta2_for_tau(1.2674, 1.5574, rp.p.tau, 0);
  CHECK(rp.at_tau.delta2_min == req.delta2_min);
  auto m = manifest(s);
  CHECK(m["command"] == "params");
  CHECK(m["config_hash"] == hex64(fnv1a(kCar)));
  CHECK(m["params"]["delta2_min_at_tau"].get<double>() == req.delta2_min);
  CHECK(out.str().find("delta2_min") != std::string::npos);
}

TEST_CASE("a period T is split into dwell steps") {
  RunConfig cfg = parse_config(replaced(kIntegrator, "epsilon: 0.1", "epsilon: 0.1\n  T: 0.5"));
  ResolvedParams rp = resolve_parameters(cfg);
  CHECK(rp.dwell >= 7);
  CHECK(rp.p.tau * static_cast<double>(rp.dwell) == doctest::Approx(0.5));
  CHECK(rp.p.tau <= choose_parameters(1, 1, 0, 0.5, 0.1, false).tau);
}

TEST_CASE("sweep rows") {
  auto rows = sweep_rows(1.2674, 1.5574, 0, 1e-3, 0.2, 50);
  REQUIRE(rows.size() == 50);
  CHECK(rows.front().tau == 1e-3);
  CHECK(rows.back().tau == 0.2);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].delta2_min > rows[i - 1].delta2_min);
  for (const auto& r : rows) CHECK(r.eps_min == (2 * 1.5574 + 0 + r.delta2_min) * r.tau / 2);
  for (const auto& r : sweep_rows(1.2674, 1.5574, 0.3, 1e-3, 0.2, 20)) CHECK(r.delta2_min >= 0.3);
  std::ostringstream csv;
  write_sweep_csv(csv, sweep_rows(1.2674, 1.5574, 0, 1e-3, 0.2, 1));
  std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.rfind("tau,eta,mu,delta2_min,eps_min\n", 0) == 0);
}

TEST_CASE("sweep command") {
  Scratch s("sweep");
  RunConfig cfg = parse_config(kCar);
  std::ostringstream out;
  CHECK(cmd_sweep(cfg, s.opt(), out) == 0);
  CHECK(fs::exists(s.dir / "sweep.csv"));
  CHECK(out.str().find("strictly increasing") != std::string::npos);
  CHECK(out.str().find("not reached") != std::string::npos);
  CHECK(manifest(s)["sweep"]["monotone"] == true);
}

TEST_CASE("decide: invariance of the middle of the interval is realizable") {
  Scratch s("decide_yes");
  RunConfig cfg = parse_config(kIntegrator);
  std::ostringstream out;
  CHECK(cmd_decide(cfg, s.opt(), out) == 0);
  CHECK(fs::exists(s.dir / "strategy.json"));
  CHECK(out.str().find("realizable for S_delta1") != std::string::npos);
  auto m = manifest(s);
  CHECK(m["verdict"] == "realizable");
  CHECK(m["realizable"] == true);
  auto o = run_synthesis(cfg);
  CHECK(o.realizable);
  CHECK(o.losing_initial.empty());
  for (auto q : o.initial) CHECK(o.strategy.winning[q]);
}

TEST_CASE("decide: a target thinner than the strengthening is not realizable") {
  Scratch s("decide_no");
  RunConfig cfg = parse_config(replaced(kIntegrator, "\"G safe\"", "\"F spot\""));
  std::ostringstream out;
  CHECK(cmd_decide(cfg, s.opt(), out) == 1);
  CHECK(out.str().find("not realizable for S_delta2") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "strategy.json"));
  auto m = manifest(s);
  CHECK(m["verdict"] == "not realizable");
  CHECK(m["certified"] == true);
  CHECK_FALSE(m["losing_initial"].empty());
}

TEST_CASE("decide verdicts partition the outcomes") {
  for (const char* f : {"\"G safe\"", "\"F spot\"", "\"safe U spot\"", "\"F safe\"", "\"safe\""}) {
    Scratch s("decide_part");
    RunConfig cfg = parse_config(replaced(kIntegrator, "\"G safe\"", f));
    std::ostringstream out;
    int code = cmd_decide(cfg, s.opt(), out);
    CHECK((code == 0 || code == 1));
    CHECK((code == 0) == run_synthesis(cfg).realizable);
    CHECK((out.str().find(" realizable for S_delta1") != std::string::npos) !=
          (out.str().find("not realizable") != std::string::npos));
  }
}

TEST_CASE("synth and simulate") {
  Scratch s("simulate");
  RunConfig cfg = parse_config(kIntegrator);
  std::ostringstream out;
  CHECK(cmd_synth(cfg, s.opt(), out) == 0);
  std::string first = read_file((s.dir / "strategy.json").string());
  CHECK(cmd_synth(cfg, s.opt(), out) == 0);
  CHECK(read_file((s.dir / "strategy.json").string()) == first);

  std::ostringstream sim;
  CHECK(cmd_simulate(cfg, s.opt(), sim) == 0);
  CHECK(sim.str().find("discrete   100 sat") != std::string::npos);
  std::istringstream table(read_file((s.dir / "runs.csv").string()));
  std::string line;
  std::getline(table, line);
  CHECK(line == "run,x0_x,periods,discharged,exited,refused,discrete,continuous,max_deviation,bound");
  std::size_t rows = 0;
  while (std::getline(table, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 10);
    CHECK(cells[6] == "sat");
    CHECK(std::stod(cells[8]) <= std::stod(cells[9]));
  }
  CHECK(rows == 100);
  std::string runs_first = read_file((s.dir / "runs.csv").string());
  std::ostringstream again;
  cmd_simulate(cfg, s.opt(), again);
  CHECK(read_file((s.dir / "runs.csv").string()) == runs_first);

  CommandOptions none = s.opt();
  none.runs = 0;
  RunConfig zero = cfg;
  apply_overrides(zero, none);
  std::ostringstream z;
  CHECK(cmd_simulate(zero, none, z) == 0);
  std::string empty = read_file((s.dir / "runs.csv").string());
  CHECK(std::count(empty.begin(), empty.end(), '\n') == 1);
}

TEST_CASE("check on trace files") {
  Scratch s("check");
  CommandOptions o = s.opt();
  o.input = s.file("a.trace", "alphabet: p q\np\np\nq\n");
  o.formula = "p U q";
  std::ostringstream out;
  CHECK(cmd_check(nullptr, o, out) == 0);
  o.input = s.file("b.trace", "# all p\nalphabet: p\np\np\np\n");
  o.formula = "G p";
  std::ostringstream g;
  CHECK(cmd_check(nullptr, o, g) == 0);
  CHECK(g.str().find("finite trace") != std::string::npos);
  o.formula = "F !p";
  CHECK(cmd_check(nullptr, o, out) == 1);
  o.input = s.file("c.trace", "alphabet: p\np\nr\n");
  CHECK_THROWS_AS(cmd_check(nullptr, o, out), IoError);
}

TEST_CASE("check on trajectory files") {
  Scratch s("check_traj");
  RunConfig cfg = parse_config(kIntegrator);
  CommandOptions o = s.opt();
  std::string csv = "t,x,u\n";
  for (int i = 0; i <= 10; ++i) csv += std::to_string(i * 0.1) + "," + std::to_string(0.3 + 0.02 * i) + ",0\n";
  o.input = s.file("traj.csv", csv);
  std::ostringstream out;
  CHECK(cmd_check(&cfg, o, out) == 0);
  o.formula = "G spot";
  CHECK(cmd_check(&cfg, o, out) == 1);
  /* a chord between boxes of one proposition whose boxes meet only at a point */
  RunConfig split = parse_config(replaced(kIntegrator, "safe: {lower: [0.2], upper: [0.8]}",
                                          "safe:\n      - {lower: [0.2], upper: [0.5]}\n      - {lower: [0.5], upper: [0.8]}"));
  o.formula = "G safe";
  o.input = s.file("jump.csv", "t,x\n0,0.3\n0.1,0.7\n");
  CHECK(cmd_check(&split, o, out) == 3);
}
