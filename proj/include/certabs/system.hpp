/*
 * system.hpp
 *
 * Control system description, one-step error bounds, and simulation of the
 * disturbed dynamics x' = f(x,u) + w, |w| <= delta.
 */

#ifndef CERTABS_SYSTEM_HPP_
#define CERTABS_SYSTEM_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "certabs/expr.hpp"
#include "certabs/geometry.hpp"

namespace certabs {

/*
 * class: SystemSpec
 *
 * x' = f(x,u) on the state box X and control box U. `definitions` are
 * named helper expressions evaluated in order before f (they may refer to
 * states, controls, constants and earlier definitions). L is a Lipschitz
 * constant of f in x and in u, M bounds |f| on X x U; both with respect
 * to the infinity norm and both supplied by the user.
 */
struct SystemSpec {
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<std::pair<std::string, Expression>> definitions;
  std::vector<Expression> f;
  Box X;
  Box U;
  double L = 0.0;
  double M = 0.0;
  Norm norm = Norm::infinity;

  std::size_t n() const noexcept { return state_names.size(); }
  std::size_t m() const noexcept { return control_names.size(); }

  /* every violated structural invariant, empty when valid */
  std::vector<std::string> validate() const;
  void validate_or_throw() const;
};

/* compiled f; const evaluation is thread-safe */
class VectorField {
public:
  explicit VectorField(const SystemSpec& sys);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }

  /* out = f(x,u); scratch is caller-owned to keep the hot path allocation free */
  void eval(std::span<const double> x, std::span<const double> u, std::span<double> out,
            std::vector<double>& scratch) const;
  Vec operator()(std::span<const double> x, std::span<const double> u) const;

private:
  std::size_t n_, m_, n_const_;
  std::vector<double> constants_;
  std::vector<CompiledExpression> defs_;
  std::vector<CompiledExpression> f_;
};

/* component-wise evaluation of f; EvalError carries the component index */
Vec eval_vector_field(const SystemSpec& sys, std::span<const double> x, std::span<const double> u);

/* (e^{L t} - 1) / L, equal to t at L = 0 */
double exp_growth(double L, double t);
/* (e^{L t} - L t - 1) / L, equal to 0 at L = 0 */
double exp_growth2(double L, double t);

/*
 * Radius of the abstract transition around the Euler endpoint q + tau f(q,a):
 *   eta/2 + eta/2 e^{L tau} + (delta1/L + mu/2)(e^{L tau} - 1) + M (e^{L tau} - L tau - 1)/L
 */
double gronwall_radius(double eta, double mu, double tau, double delta1, double L, double M);

/*
 * Left-hand side of the completeness margin; the abstraction is sandwiched
 * below the delta2-perturbed system when the value is < delta2.
 */
double margin_lhs(double eta, double mu, double tau, double delta1, double L, double M);

/* (M + delta) tau / 2 */
double intersample_bound(double M, double delta, double tau);

class SimulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/*
 * Seeded source of piecewise-constant disturbances, uniform on the
 * delta-ball of the infinity norm. The double conversion is done by hand
 * so runs are bit-reproducible across standard libraries.
 */
class DisturbanceSource {
public:
  explicit DisturbanceSource(std::uint64_t seed) : rng_(seed) {}
  double uniform01();
  void draw(double delta, std::span<double> out);
  Vec draw(double delta, std::size_t n);

private:
  std::mt19937_64 rng_;
};

/*
 * Dense record of a simulated run. Samples are taken every h time units;
 * controls[s] is applied from sample segment_start[s] on. disturbances[i]
 * is the value used on [t[i], t[i+1]).
 */
struct Trajectory {
  double h = 0.0;
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> controls;
  std::vector<std::size_t> segment_start;
  std::vector<Vec> disturbances;
  bool exited = false;      // left X; the last sample is the first one outside
  std::size_t exit_index = 0;

  std::size_t size() const noexcept { return t.size(); }
  void append(const Trajectory& seg);
};

/*
 * Integrate x' = f(x,u) + w over [t0, t0 + tau] with classical RK4 at step
 * tau/substeps; w is redrawn from `noise` for every sub-step.
 */
Trajectory simulate_step(const SystemSpec& sys, const VectorField& field, std::span<const double> x,
                         std::span<const double> u, double tau, double delta, std::size_t substeps,
                         DisturbanceSource& noise, double t0 = 0.0);

/* convenience overload owning its generator */
Trajectory simulate_step(const SystemSpec& sys, std::span<const double> x, std::span<const double> u,
                         double tau, double delta, std::size_t substeps,
                         std::uint64_t disturbance_seed);

/* sampled estimates; NOT a certificate */
struct ConstantEstimate {
  double L = 0.0;
  double L_state = 0.0;
  double L_control = 0.0;
  double M = 0.0;
  bool rigorous = false;
};

ConstantEstimate estimate_constants(const SystemSpec& sys, std::size_t samples, std::uint64_t seed);

/* warnings for sampled violations of the supplied L and M */
std::vector<std::string> spot_check_constants(const SystemSpec& sys, std::size_t samples,
                                              std::uint64_t seed);

}  // namespace certabs

#endif
