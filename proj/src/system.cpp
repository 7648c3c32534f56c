/*
 * system.cpp
 */

#include "certabs/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace certabs {

namespace {

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::vector<std::string> slot_names(const SystemSpec& sys) {
  std::vector<std::string> slots = sys.state_names;
  slots.insert(slots.end(), sys.control_names.begin(), sys.control_names.end());
  for (const auto& c : sys.constants) slots.push_back(c.first);
  for (const auto& d : sys.definitions) slots.push_back(d.first);
  return slots;
}

}  // namespace

std::vector<std::string> SystemSpec::validate() const {
  std::vector<std::string> errors;
  std::set<std::string> declared;
  auto declare = [&](const std::string& name, const char* what) {
    if (!is_identifier(name))
      errors.push_back(std::string(what) + " name '" + name + "' is not an identifier");
    else if (is_function_name(name))
      errors.push_back(std::string(what) + " name '" + name + "' shadows a function");
    else if (!declared.insert(name).second)
      errors.push_back("name '" + name + "' is declared twice");
  };
  for (const auto& s : state_names) declare(s, "state");
  for (const auto& c : control_names) declare(c, "control");
  for (const auto& c : constants) {
    declare(c.first, "constant");
    if (!std::isfinite(c.second)) errors.push_back("constant '" + c.first + "' is not finite");
  }
  auto check_vars = [&](const Expression& e, const std::string& where) {
    if (e.empty()) {
      errors.push_back(where + " is empty");
      return;
    }
    for (const auto& v : e.variables())
      if (!declared.count(v)) errors.push_back(where + " uses undeclared name '" + v + "'");
  };
  for (const auto& d : definitions) {
    check_vars(d.second, "definition '" + d.first + "'");
    declare(d.first, "definition");
  }
  if (state_names.empty()) errors.push_back("at least one state is required");
  if (f.size() != n())
    errors.push_back("expected " + std::to_string(n()) + " dynamics expressions, got " +
                     std::to_string(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i)
    check_vars(f[i], "dynamics component " + std::to_string(i));
  if (X.dim() != n())
    errors.push_back("state box has dimension " + std::to_string(X.dim()) + ", expected " +
                     std::to_string(n()));
  if (U.dim() != m())
    errors.push_back("control box has dimension " + std::to_string(U.dim()) + ", expected " +
                     std::to_string(m()));
  if (!(L >= 0.0) || !std::isfinite(L)) errors.push_back("Lipschitz constant L must be finite and >= 0");
  if (!(M >= 0.0) || !std::isfinite(M)) errors.push_back("bound M must be finite and >= 0");
  return errors;
}

void SystemSpec::validate_or_throw() const {
  auto errors = validate();
  if (errors.empty()) return;
  std::string msg = "invalid system:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw std::invalid_argument(msg);
}

VectorField::VectorField(const SystemSpec& sys)
    : n_(sys.n()), m_(sys.m()), n_const_(sys.constants.size()) {
  sys.validate_or_throw();
  auto slots = slot_names(sys);
  for (const auto& c : sys.constants) constants_.push_back(c.second);
  for (const auto& d : sys.definitions) defs_.emplace_back(d.second, slots);
  for (const auto& e : sys.f) f_.emplace_back(e, slots);
}

void VectorField::eval(std::span<const double> x, std::span<const double> u, std::span<double> out,
                       std::vector<double>& s) const {
  s.resize(n_ + m_ + n_const_ + defs_.size());
  std::copy(x.begin(), x.end(), s.begin());
  std::copy(u.begin(), u.end(), s.begin() + static_cast<std::ptrdiff_t>(n_));
  std::copy(constants_.begin(), constants_.end(), s.begin() + static_cast<std::ptrdiff_t>(n_ + m_));
  const std::size_t base = n_ + m_ + n_const_;
  for (std::size_t d = 0; d < defs_.size(); ++d) s[base + d] = defs_[d](s);
  for (std::size_t i = 0; i < n_; ++i) {
    try {
      out[i] = f_[i](s);
    } catch (const EvalError& e) {
      throw EvalError("dynamics component " + std::to_string(i) + ": " + e.what());
    }
  }
}

Vec VectorField::operator()(std::span<const double> x, std::span<const double> u) const {
  if (x.size() != n_ || u.size() != m_) throw std::invalid_argument("state/control dimension mismatch");
  Vec out(n_);
  std::vector<double> scratch;
  eval(x, u, out, scratch);
  return out;
}

Vec eval_vector_field(const SystemSpec& sys, std::span<const double> x, std::span<const double> u) {
  return VectorField(sys)(x, u);
}

double exp_growth(double L, double t) {
  const double z = L * t;
  if (std::fabs(z) < 1e-5) return t * (1.0 + z / 2.0 + z * z / 6.0);
  return std::expm1(z) / L;
}

double exp_growth2(double L, double t) {
  const double z = L * t;
  if (std::fabs(z) < 0.1) {
    /* z/2 + z^2/6 + ... = (e^z - z - 1)/z, times t */
    double term = 0.5, sum = 0.0;
    for (int k = 3; k <= 11; ++k) {
      sum += term;
      term *= z / k;
    }
    return t * z * sum;
  }
  return (std::expm1(z) - z) / L;
}

double gronwall_radius(double eta, double mu, double tau, double delta1, double L, double M) {
  const double g1 = exp_growth(L, tau);
  const double g2 = exp_growth2(L, tau);
  const double e = 1.0 + L * g1;
  return 0.5 * eta + 0.5 * eta * e + delta1 * g1 + 0.5 * mu * L * g1 + M * g2;
}

double margin_lhs(double eta, double mu, double tau, double delta1, double L, double M) {
  if (!(tau > 0.0)) throw std::invalid_argument("margin_lhs requires tau > 0");
  const double g1 = exp_growth(L, tau);
  const double g2 = exp_growth2(L, tau);
  const double e = 1.0 + L * g1;
  return (eta + eta * e + delta1 * g1 + mu * L * g1 + 2.0 * M * g2) * (L + 1.0 / tau);
}

double intersample_bound(double M, double delta, double tau) { return (M + delta) * tau / 2.0; }

double DisturbanceSource::uniform01() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void DisturbanceSource::draw(double delta, std::span<double> out) {
  for (auto& w : out) w = delta * (2.0 * uniform01() - 1.0);
}

Vec DisturbanceSource::draw(double delta, std::size_t n) {
  Vec w(n);
  draw(delta, w);
  return w;
}

void Trajectory::append(const Trajectory& seg) {
  if (seg.t.empty()) return;
  std::size_t skip = t.empty() ? 0 : 1;  // shared boundary sample
  std::size_t offset = t.size() - skip;
  if (t.empty()) h = seg.h;
  for (std::size_t i = skip; i < seg.t.size(); ++i) {
    t.push_back(seg.t[i]);
    x.push_back(seg.x[i]);
  }
  for (std::size_t s = 0; s < seg.controls.size(); ++s) {
    controls.push_back(seg.controls[s]);
    segment_start.push_back(seg.segment_start[s] + offset);
  }
  disturbances.insert(disturbances.end(), seg.disturbances.begin(), seg.disturbances.end());
  if (seg.exited) {
    exited = true;
    exit_index = seg.exit_index + offset;
  }
}

Trajectory simulate_step(const SystemSpec& sys, const VectorField& field, std::span<const double> x0,
                         std::span<const double> u, double tau, double delta, std::size_t substeps,
                         DisturbanceSource& noise, double t0) {
  const std::size_t n = sys.n();
  if (x0.size() != n || u.size() != sys.m()) throw std::invalid_argument("state/control dimension mismatch");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be >= 0");
  if (!sys.X.contains(x0)) throw DomainError("initial state lies outside X");

  Trajectory tr;
  tr.h = tau / static_cast<double>(substeps);
  tr.t.push_back(t0);
  tr.x.emplace_back(x0.begin(), x0.end());
  tr.controls.emplace_back(u.begin(), u.end());
  tr.segment_start.push_back(0);

  const double h = tr.h;
  Vec x(x0.begin(), x0.end()), w(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  std::vector<double> scratch;
  auto rhs = [&](const Vec& at, Vec& out) {
    field.eval(at, u, out, scratch);
    for (std::size_t i = 0; i < n; ++i) out[i] += w[i];
  };
  for (std::size_t s = 0; s < substeps; ++s) {
    noise.draw(delta, w);
    tr.disturbances.push_back(w);
    rhs(x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(x[i]))
        throw SimulationError("non-finite state at sub-step " + std::to_string(s + 1));
    tr.t.push_back(t0 + static_cast<double>(s + 1) * h);
    tr.x.push_back(x);
    if (!sys.X.contains(x)) {
      tr.exited = true;
      tr.exit_index = tr.t.size() - 1;
      break;
    }
  }
  return tr;
}

Trajectory simulate_step(const SystemSpec& sys, std::span<const double> x, std::span<const double> u,
                         double tau, double delta, std::size_t substeps, std::uint64_t seed) {
  VectorField field(sys);
  DisturbanceSource noise(seed);
  return simulate_step(sys, field, x, u, tau, delta, substeps, noise);
}

namespace {

void sample_box(const Box& b, DisturbanceSource& rng, Vec& out) {
  out.resize(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i)
    out[i] = b.lower[i] + rng.uniform01() * (b.upper[i] - b.lower[i]);
}

}  // namespace

ConstantEstimate estimate_constants(const SystemSpec& sys, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("estimate_constants needs at least 2 samples");
  VectorField field(sys);
  DisturbanceSource rng(seed);
  ConstantEstimate est;
  Vec x, y, u, v;
  for (std::size_t s = 0; s < samples; ++s) {
    sample_box(sys.X, rng, x);
    sample_box(sys.X, rng, y);
    sample_box(sys.U, rng, u);
    sample_box(sys.U, rng, v);
    Vec fxu = field(x, u);
    est.M = std::max(est.M, norm(fxu));
    double dx = distance(x, y);
    if (dx > 0.0) est.L_state = std::max(est.L_state, distance(fxu, field(y, u)) / dx);
    double du = distance(u, v);
    if (du > 0.0) est.L_control = std::max(est.L_control, distance(fxu, field(x, v)) / du);
  }
  est.L = std::max(est.L_state, est.L_control);
  return est;
}

std::vector<std::string> spot_check_constants(const SystemSpec& sys, std::size_t samples,
                                              std::uint64_t seed) {
  std::vector<std::string> warnings;
  if (samples < 2) return warnings;
  ConstantEstimate est = estimate_constants(sys, samples, seed);
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };
  if (est.M > sys.M)
    warnings.push_back("sampled |f| reaches " + fmt(est.M) + " > M = " + fmt(sys.M));
  if (est.L_state > sys.L)
    warnings.push_back("sampled state difference quotient reaches " + fmt(est.L_state) +
                       " > L = " + fmt(sys.L));
  if (est.L_control > sys.L)
    warnings.push_back("sampled control difference quotient reaches " + fmt(est.L_control) +
                       " > L = " + fmt(sys.L));
  return warnings;
}

}  // namespace certabs
