/*
 * abstraction.cpp
 */

#include "certabs/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "certabs/hash.hpp"
#include "certabs/parallel.hpp"

namespace certabs {

double strengthening_margin(double M, double delta, double tau, double eta, bool preserving) {
  return (M + delta) * tau / 2.0 + (preserving ? 0.0 : eta / 2.0);
}

AbstractionParams make_params(double L, double M, double tau, double eta, double mu, double delta1,
                              double delta2, double eps, bool preserving) {
  AbstractionParams p;
  p.tau = tau;
  p.eta = eta;
  p.mu = mu;
  p.delta1 = delta1;
  p.delta2 = delta2;
  p.eps = eps;
  p.preserving = preserving;
  p.eps1 = strengthening_margin(M, delta1, tau, eta, preserving);
  p.eps2 = strengthening_margin(M, delta2, tau, eta, preserving);
  p.r = gronwall_radius(eta, mu, tau, delta1, L, M);
  p.margin = tau > 0.0 ? margin_lhs(eta, mu, tau, delta1, L, M) : std::numeric_limits<double>::infinity();
  return p;
}

bool margin_holds(const AbstractionParams& p) { return p.margin < p.delta2; }

bool labelling_budget_holds(const AbstractionParams& p) { return p.eps1 + p.eps2 <= p.eps; }

AbstractionParams choose_parameters(double L, double M, double delta1, double delta2, double eps,
                                    bool preserving, double ceiling) {
  if (!(delta1 >= 0.0)) throw ParameterError("delta1 must be >= 0");
  if (!(delta2 > delta1))
    throw ParameterError("infeasible: delta2 (" + std::to_string(delta2) +
                         ") must exceed delta1 (" + std::to_string(delta1) + ")");
  if (!(eps > 0.0)) throw ParameterError("infeasible: eps must be > 0");
  if (!(L >= 0.0) || !(M >= 0.0)) throw ParameterError("L and M must be >= 0");
  if (!(ceiling > 0.0)) throw ParameterError("tau ceiling must be > 0");

  auto at = [&](double tau) {
    return make_params(L, M, tau, tau * tau, tau, delta1, delta2, eps, preserving);
  };
  auto ok = [](const AbstractionParams& p) { return margin_holds(p) && labelling_budget_holds(p); };

  constexpr double kFloor = 1e-9;
  double hi = ceiling;
  AbstractionParams best = at(hi);
  if (ok(best)) return best;
  double lo = hi;
  while (true) {
    lo /= 2.0;
    if (lo < kFloor) {
      AbstractionParams f = at(kFloor);
      std::ostringstream msg;
      msg.precision(6);
      msg << "no feasible tau above " << kFloor << ": margin_lhs=" << f.margin
          << " vs delta2=" << delta2 << ", eps1+eps2=" << f.eps1 + f.eps2 << " vs eps=" << eps;
      throw ParameterError(msg.str());
    }
    best = at(lo);
    if (ok(best)) break;
    hi = lo;
  }
  for (int it = 0; it < 60 && (hi - lo) > 1e-12 * lo; ++it) {
    double mid = 0.5 * (lo + hi);
    AbstractionParams p = at(mid);
    if (ok(p)) {
      lo = mid;
      best = p;
    } else {
      hi = mid;
    }
  }
  return best;
}

Delta2Requirement min_delta2_for_tau(double L, double M, double tau, double delta1) {
  Delta2Requirement r;
  r.delta2_min = margin_lhs(tau * tau, tau, tau, delta1, L, M);
  r.eps_min = (2 * M + delta1 + r.delta2_min) * tau / 2;
  return r;
}

double dwell_mismatch_bound(double tau_star, double delta1, double delta2) {
  if (!(tau_star > 0.0)) throw ParameterError("tau_star must be > 0");
  if (!(delta1 >= 0.0) || !(delta2 > delta1)) throw ParameterError("need delta2 > delta1 >= 0");
  const double d = delta2 - delta1;
  return 0.99 * d * tau_star / (1.0 + d);
}

std::vector<Vec> control_actions(const Grid& controls, const Box& U) {
  std::vector<Vec> out(controls.size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    Vec c = controls.cell_center(i);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = std::clamp(c[k], U.lower[k], U.upper[k]);
    out[i] = std::move(c);
  }
  return out;
}

Vec FiniteAbstraction::euler_endpoint(std::size_t q, std::size_t a) const {
  VectorField field(sys_);
  Vec x = states_.cell_center(q);
  Vec fx = field(x, actions_[a]);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += params_.tau * fx[i];
  return x;
}

IndexRange FiniteAbstraction::successor_range(std::size_t q, std::size_t a) const {
  const std::size_t n = states_.dim();
  MultiIndex k = states_.unflatten(q);
  const std::int16_t* off = offsets(q, a);
  IndexRange r{MultiIndex(n), MultiIndex(n)};
  for (std::size_t i = 0; i < n; ++i) {
    r.lo[i] = k[i] + off[i];
    r.hi[i] = k[i] + off[n + i];
  }
  return r;
}

std::vector<std::size_t> FiniteAbstraction::post(std::size_t q, std::size_t a) const {
  std::vector<std::size_t> out;
  for_each_cell(states_, successor_range(q, a), [&](std::size_t id) { out.push_back(id); });
  return out;
}

std::uint64_t FiniteAbstraction::relation_hash() const {
  Fnv1a h;
  h.update_value(states_.size());
  h.update_value(actions_.size());
  h.update(offsets_.data(), offsets_.size() * sizeof(std::int16_t));
  h.update(blocked_.data(), blocked_.size());
  return h.digest();
}

FiniteAbstraction build_abstraction(const SystemSpec& sys, const AbstractionParams& p,
                                    const BuildOptions& opt) {
  sys.validate_or_throw();
  if (!(p.tau >= 0.0) || !(p.eta >= 0.0) || !(p.mu >= 0.0) || !(p.delta1 >= 0.0))
    throw ParameterError("tau, eta, mu and delta1 must be >= 0");
  if (!(p.r >= 0.0) || !std::isfinite(p.r)) throw ParameterError("transition radius must be finite");

  FiniteAbstraction abs;
  abs.sys_ = sys;
  abs.params_ = p;
  try {
    abs.states_ = Grid(sys.X, p.eta);
    abs.controls_ = Grid(sys.U, p.mu);
  } catch (const std::invalid_argument& e) {
    throw ParameterError(e.what());
  }
  if (abs.states_.size() > opt.max_cells)
    throw ParameterError("grid too large: " + std::to_string(abs.states_.size()) +
                         " cells exceeds the limit of " + std::to_string(opt.max_cells));
  abs.actions_ = control_actions(abs.controls_, sys.U);

  const std::size_t n = sys.n(), nq = abs.states_.size(), na = abs.actions_.size();
  abs.offsets_.assign(nq * na * 2 * n, 0);
  abs.blocked_.assign(nq * na, 0);
  const VectorField field(sys);
  const Grid& grid = abs.states_;

  parallel_chunks(nq, opt.jobs, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch;
    Vec fx(n), endpoint(n);
    for (std::size_t q = begin; q < end; ++q) {
      MultiIndex k = grid.unflatten(q);
      Vec center = grid.cell_center(k);
      for (std::size_t a = 0; a < na; ++a) {
        field.eval(center, abs.actions_[a], fx, scratch);
        for (std::size_t i = 0; i < n; ++i) {
          endpoint[i] = center[i] + p.tau * fx[i];
          if (!std::isfinite(endpoint[i]))
            throw DomainError("non-finite Euler endpoint at cell " + std::to_string(q) +
                              ", action " + std::to_string(a));
        }
        IndexRange r = lattice_center_range(grid, endpoint, p.r);
        std::int16_t* off = &abs.offsets_[(q * na + a) * 2 * n];
        bool out = r.empty();
        for (std::size_t i = 0; i < n; ++i) {
          std::int64_t lo = r.lo[i] - k[i], hi = r.hi[i] - k[i];
          if (lo < std::numeric_limits<std::int16_t>::min() ||
              hi > std::numeric_limits<std::int16_t>::max())
            throw ParameterError("successor set spans more than 32767 cells on axis " +
                                 std::to_string(i));
          off[i] = static_cast<std::int16_t>(lo);
          off[n + i] = static_cast<std::int16_t>(hi);
          if (r.lo[i] < 0 || r.hi[i] >= grid.counts()[i]) out = true;
        }
        abs.blocked_[q * na + a] = out ? 1 : 0;
      }
    }
  });

  abs.blocked_count_ = static_cast<std::size_t>(std::count(abs.blocked_.begin(), abs.blocked_.end(), 1));
  abs.min_off_.assign(n, 0);
  abs.max_off_.assign(n, 0);
  for (std::size_t pair = 0; pair < nq * na; ++pair) {
    const std::int16_t* off = &abs.offsets_[pair * 2 * n];
    for (std::size_t i = 0; i < n; ++i) {
      abs.min_off_[i] = std::min(abs.min_off_[i], off[i]);
      abs.max_off_[i] = std::max(abs.max_off_[i], off[n + i]);
    }
  }
  return abs;
}

namespace {

struct Affine {
  double a, b, c;
};

Affine detect_affine(const SystemSpec& sys) {
  if (sys.n() != 1 || sys.m() != 1)
    throw std::invalid_argument("sandwich check needs one state and one control");
  VectorField f(sys);
  const double x0 = sys.X.lower[0], x1 = sys.X.upper[0];
  const double u0 = sys.U.lower[0], u1 = sys.U.upper[0];
  auto F = [&](double x, double u) { return f(Vec{x}, Vec{u})[0]; };
  Affine m{};
  m.a = x1 > x0 ? (F(x1, u0) - F(x0, u0)) / (x1 - x0) : 0.0;
  m.b = u1 > u0 ? (F(x0, u1) - F(x0, u0)) / (u1 - u0) : 0.0;
  m.c = F(x0, u0) - m.a * x0 - m.b * u0;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) {
      double x = x0 + (x1 - x0) * i / 4.0, u = u0 + (u1 - u0) * j / 4.0;
      double v = F(x, u), w = m.a * x + m.b * u + m.c;
      if (std::fabs(v - w) > 1e-9 * (1.0 + std::fabs(v)))
        throw std::invalid_argument("sandwich check needs an affine system x' = a x + b u + c");
    }
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

SandwichReport check_sandwich(const SystemSpec& sys, const FiniteAbstraction& abs, double delta2) {
  const Affine m = detect_affine(sys);
  const auto& p = abs.params();
  const double tau = p.tau, eta = abs.states().eta();
  const double e = std::exp(m.a * tau);
  const double g = m.a == 0.0 ? tau : std::expm1(m.a * tau) / m.a;
  const double tol = 1e-12 * (1.0 + std::fabs(sys.X.lower[0]) + std::fabs(sys.X.upper[0]));
  const Grid& grid = abs.states();

  SandwichReport rep;
  auto note = [&](std::string s) {
    if (rep.counterexamples.size() < 10) rep.counterexamples.push_back(std::move(s));
  };
  for (std::size_t q = 0; q < abs.num_states(); ++q) {
    const double xq = grid.cell_center(q)[0];
    for (std::size_t a = 0; a < abs.num_actions(); ++a) {
      ++rep.pairs_checked;
      const double ua = abs.actions()[a][0];
      const IndexRange succ = abs.successor_range(q, a);

      /* lower: every cell touching the delta1 reach set of the cell is a successor */
      double lo = e * (xq - eta / 2) + (m.b * ua + m.c - p.delta1) * g + tol;
      double hi = e * (xq + eta / 2) + (m.b * ua + m.c + p.delta1) * g - tol;
      if (hi < lo) lo = hi = 0.5 * (lo + hi);
      IndexRange need = lattice_ball_range(grid, std::vector<double>{0.5 * (lo + hi)}, 0.5 * (hi - lo));
      if (need.lo[0] < succ.lo[0] || need.hi[0] > succ.hi[0]) {
        rep.lower_ok = false;
        note("lower: q=" + fmt(xq) + " a=" + fmt(ua) + " reach [" + fmt(lo) + ", " + fmt(hi) +
             "] needs cells " + std::to_string(need.lo[0]) + ".." + std::to_string(need.hi[0]) +
             ", successors are " + std::to_string(succ.lo[0]) + ".." + std::to_string(succ.hi[0]));
      }

      /* upper: every point of every successor cell is delta2-reachable from every x, u */
      Box ucell = abs.controls().cell_box(abs.controls().cell_id(abs.actions()[a]));
      double ulo = std::max(ucell.lower[0], sys.U.lower[0]);
      double uhi = std::min(ucell.upper[0], sys.U.upper[0]);
      double bu_max = std::max(m.b * ulo, m.b * uhi), bu_min = std::min(m.b * ulo, m.b * uhi);
      double rlo = e * (xq + eta / 2) + (bu_max + m.c - delta2) * g;
      double rhi = e * (xq - eta / 2) + (bu_min + m.c + delta2) * g;
      if (succ.empty()) continue;
      double slo = grid.center_coord(0, succ.lo[0]) - eta / 2;
      double shi = grid.center_coord(0, succ.hi[0]) + eta / 2;
      if (slo < rlo - tol || shi > rhi + tol) {
        rep.upper_ok = false;
        note("upper: q=" + fmt(xq) + " a=" + fmt(ua) + " successor cells cover [" + fmt(slo) +
             ", " + fmt(shi) + "] but the delta2 reach set is [" + fmt(rlo) + ", " + fmt(rhi) + "]");
      }
    }
  }
  return rep;
}

}  // namespace certabs
