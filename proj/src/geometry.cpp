/*
 * geometry.cpp
 */

#include "certabs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace certabs {

namespace {

/* snap values within rounding noise of a lattice boundary onto it */
double snap(double u) {
  double r = std::nearbyint(u);
  return std::fabs(u - r) <= 1e-12 * std::max(1.0, std::fabs(u)) ? r : u;
}

void check_dim(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("dimension mismatch");
}

}  // namespace

Norm parse_norm(const std::string& tag) {
  if (tag == "inf" || tag == "infinity" || tag == "max") return Norm::infinity;
  throw std::invalid_argument("unsupported norm '" + tag + "' (only the infinity norm is available)");
}

const char* norm_name(Norm) { return "infinity"; }

double norm(std::span<const double> v, Norm) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::fabs(c));
  return m;
}

double distance(std::span<const double> a, std::span<const double> b, Norm) {
  check_dim(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Box::Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  check_dim(lower.size(), upper.size());
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw std::invalid_argument("box lower corner exceeds upper corner on axis " +
                                  std::to_string(i));
}

bool Box::contains(std::span<const double> x) const {
  check_dim(x.size(), dim());
  for (std::size_t i = 0; i < dim(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

bool Box::contains(const Box& o) const {
  check_dim(o.dim(), dim());
  for (std::size_t i = 0; i < dim(); ++i)
    if (o.lower[i] < lower[i] || o.upper[i] > upper[i]) return false;
  return true;
}

bool Box::intersects(const Box& o) const {
  check_dim(o.dim(), dim());
  for (std::size_t i = 0; i < dim(); ++i)
    if (o.upper[i] < lower[i] || o.lower[i] > upper[i]) return false;
  return true;
}

Vec Box::center() const {
  Vec c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

Vec Box::width() const {
  Vec w(dim());
  for (std::size_t i = 0; i < dim(); ++i) w[i] = upper[i] - lower[i];
  return w;
}

std::string to_string(const Box& b) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) os << " x ";
    os << '[' << b.lower[i] << ", " << b.upper[i] << ']';
  }
  return os.str();
}

std::optional<Box> erode_box(const Box& b, double eps) {
  if (eps < 0.0) throw std::invalid_argument("erosion radius must be non-negative");
  Box r = b;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    r.lower[i] = b.lower[i] + eps;
    r.upper[i] = b.upper[i] - eps;
    if (r.lower[i] > r.upper[i]) return std::nullopt;
  }
  return r;
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  check_dim(a.dim(), b.dim());
  Box r = a;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    r.lower[i] = std::max(a.lower[i], b.lower[i]);
    r.upper[i] = std::min(a.upper[i], b.upper[i]);
    if (r.lower[i] > r.upper[i]) return std::nullopt;
  }
  return r;
}

Grid::Grid(Box covered, double eta, std::optional<Vec> anchor)
    : covered_(std::move(covered)), eta_(eta) {
  const std::size_t n = covered_.dim();
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("grid width must be >= 0");
  anchor_ = anchor ? *anchor : covered_.lower;
  check_dim(anchor_.size(), n);
  first_.assign(n, 0);
  counts_.assign(n, 1);
  if (eta == 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      if (covered_.lower[i] != covered_.upper[i])
        throw std::invalid_argument("grid width 0 requires a degenerate (point) box");
    anchor_ = covered_.lower;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double ulo = snap((covered_.lower[i] - anchor_[i]) / eta);
      double uhi = snap((covered_.upper[i] - anchor_[i]) / eta);
      auto lo = static_cast<std::int64_t>(std::floor(ulo));
      auto hi = std::max(lo, static_cast<std::int64_t>(std::ceil(uhi)) - 1);
      first_[i] = lo;
      counts_[i] = hi - lo + 1;
    }
  }
  const double limit = static_cast<double>(std::numeric_limits<std::int64_t>::max());
  double total = 1.0;
  size_ = 1;
  for (auto c : counts_) {
    total *= static_cast<double>(c);
    if (total > limit) throw DomainError("grid too large: cell count overflows");
    size_ *= static_cast<std::size_t>(c);
  }
}

MultiIndex Grid::cell_index(std::span<const double> x) const {
  if (!covered_.contains(x)) {
    std::ostringstream os;
    os.precision(17);
    os << "point (";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ") lies outside " << to_string(covered_);
    throw DomainError(os.str());
  }
  MultiIndex k(dim(), 0);
  if (eta_ == 0.0) return k;
  for (std::size_t i = 0; i < dim(); ++i) {
    auto c = static_cast<std::int64_t>(std::floor(snap((x[i] - anchor_[i]) / eta_))) - first_[i];
    k[i] = std::clamp<std::int64_t>(c, 0, counts_[i] - 1);
  }
  return k;
}

double Grid::center_coord(std::size_t axis, std::int64_t k) const {
  if (eta_ == 0.0) return covered_.lower[axis];
  return anchor_[axis] + (static_cast<double>(first_[axis] + k) + 0.5) * eta_;
}

Vec Grid::cell_center(const MultiIndex& k) const {
  Vec c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = center_coord(i, k[i]);
  return c;
}

Box Grid::cell_box(const MultiIndex& k) const {
  Vec lo(dim()), hi(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    double c = center_coord(i, k[i]);
    lo[i] = c - 0.5 * eta_;
    hi[i] = c + 0.5 * eta_;
  }
  return Box(std::move(lo), std::move(hi));
}

bool Grid::in_grid(const MultiIndex& k) const {
  for (std::size_t i = 0; i < dim(); ++i)
    if (k[i] < 0 || k[i] >= counts_[i]) return false;
  return true;
}

std::size_t Grid::flatten(const MultiIndex& k) const {
  std::size_t id = 0;
  for (std::size_t i = 0; i < dim(); ++i)
    id = id * static_cast<std::size_t>(counts_[i]) + static_cast<std::size_t>(k[i]);
  return id;
}

MultiIndex Grid::unflatten(std::size_t id) const {
  MultiIndex k(dim());
  for (std::size_t i = dim(); i-- > 0;) {
    auto c = static_cast<std::size_t>(counts_[i]);
    k[i] = static_cast<std::int64_t>(id % c);
    id /= c;
  }
  return k;
}

bool IndexRange::empty() const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) return true;
  return false;
}

std::size_t IndexRange::count() const {
  if (empty()) return 0;
  std::size_t c = 1;
  for (std::size_t i = 0; i < lo.size(); ++i) c *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  return c;
}

namespace {

/*
 * Per-axis lattice indices k with |center(k) - c| <= reach. The initial
 * guess comes from division; the direct comparison decides the edges so
 * the result matches a brute-force scan exactly.
 */
void axis_range(const Grid& g, std::size_t axis, double c, double reach, std::int64_t& lo,
                std::int64_t& hi) {
  if (g.eta() == 0.0) {
    bool in = std::fabs(g.center_coord(axis, 0) - c) <= reach;
    lo = in ? 0 : 1;
    hi = 0;
    return;
  }
  const double eta = g.eta();
  const double base = g.anchor()[axis];
  const double off = static_cast<double>(g.first()[axis]);
  const double slack = 1e-9 * eta;
  auto within = [&](std::int64_t k) { return std::fabs(g.center_coord(axis, k) - c) <= reach + slack; };
  auto guess_lo = static_cast<std::int64_t>(std::ceil((c - reach - base) / eta - 0.5 - off));
  auto guess_hi = static_cast<std::int64_t>(std::floor((c + reach - base) / eta - 0.5 - off));
  lo = guess_lo;
  while (within(lo - 1)) --lo;
  while (lo <= guess_hi + 1 && !within(lo)) ++lo;
  hi = guess_hi;
  while (within(hi + 1)) ++hi;
  while (hi >= lo && !within(hi)) --hi;
}

}  // namespace

IndexRange lattice_center_range(const Grid& g, std::span<const double> center, double radius) {
  check_dim(center.size(), g.dim());
  IndexRange r{MultiIndex(g.dim()), MultiIndex(g.dim())};
  for (std::size_t i = 0; i < g.dim(); ++i) axis_range(g, i, center[i], radius, r.lo[i], r.hi[i]);
  return r;
}

IndexRange lattice_ball_range(const Grid& g, std::span<const double> center, double radius) {
  if (radius < 0.0) throw std::invalid_argument("radius must be non-negative");
  return lattice_center_range(g, center, radius + 0.5 * g.eta());
}

IndexRange clip(const Grid& g, const IndexRange& r) {
  IndexRange c = r;
  for (std::size_t i = 0; i < g.dim(); ++i) {
    c.lo[i] = std::max<std::int64_t>(c.lo[i], 0);
    c.hi[i] = std::min<std::int64_t>(c.hi[i], g.counts()[i] - 1);
  }
  return c;
}

std::vector<std::size_t> ball_cover(const Grid& g, std::span<const double> center, double radius) {
  std::vector<std::size_t> out;
  for_each_cell(g, lattice_ball_range(g, center, radius), [&](std::size_t id) { out.push_back(id); });
  return out;
}

}  // namespace certabs
