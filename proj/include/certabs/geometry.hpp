/*
 * geometry.hpp
 *
 * Boxes, the infinity norm, and uniform cell lattices.
 */

#ifndef CERTABS_GEOMETRY_HPP_
#define CERTABS_GEOMETRY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace certabs {

using Vec = std::vector<double>;
using MultiIndex = std::vector<std::int64_t>;

class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/* The only norm in use. Balls, distances and the constants L, M all refer to it. */
enum class Norm { infinity };

Norm parse_norm(const std::string& tag);
const char* norm_name(Norm n);

double norm(std::span<const double> v, Norm n = Norm::infinity);
double distance(std::span<const double> a, std::span<const double> b, Norm n = Norm::infinity);

/* closed axis-aligned box, lower <= upper component-wise */
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec hi);

  std::size_t dim() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x) const;
  bool contains(const Box& other) const;
  bool intersects(const Box& other) const;
  Vec center() const;
  Vec width() const;

  friend bool operator==(const Box&, const Box&) = default;
};

std::string to_string(const Box& b);

/* {x : x + eps*B within b}; nullopt when an axis collapses */
std::optional<Box> erode_box(const Box& b, double eps);

/* intersection, nullopt when disjoint */
std::optional<Box> intersect(const Box& a, const Box& b);

/*
 * class: Grid
 *
 * Uniform lattice of half-open hypercubes of side eta anchored at `anchor`,
 * restricted to the cells that meet the covered box. Lattice cell k spans
 * [anchor + k*eta, anchor + (k+1)*eta) on every axis; the upper face of the
 * covered box is assigned to the last cell so every covered point has
 * exactly one cell. Cell multi-indices are 0-based within the grid.
 *
 * eta == 0 is allowed only for degenerate (point) boxes and yields one cell.
 */
class Grid {
public:
  Grid() = default;
  Grid(Box covered, double eta, std::optional<Vec> anchor = std::nullopt);

  std::size_t dim() const noexcept { return covered_.dim(); }
  double eta() const noexcept { return eta_; }
  const Vec& anchor() const noexcept { return anchor_; }
  const Box& covered() const noexcept { return covered_; }
  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return size_; }

  /* the unique cell containing x; DomainError outside the covered box */
  MultiIndex cell_index(std::span<const double> x) const;
  std::size_t cell_id(std::span<const double> x) const { return flatten(cell_index(x)); }

  Vec cell_center(const MultiIndex& k) const;
  Vec cell_center(std::size_t id) const { return cell_center(unflatten(id)); }
  /* center coordinate along one axis */
  double center_coord(std::size_t axis, std::int64_t k) const;
  /* closed hypercube of the cell */
  Box cell_box(const MultiIndex& k) const;
  Box cell_box(std::size_t id) const { return cell_box(unflatten(id)); }

  bool in_grid(const MultiIndex& k) const;
  std::size_t flatten(const MultiIndex& k) const;
  MultiIndex unflatten(std::size_t id) const;

  /* lattice offset of grid index 0 on each axis (anchor-relative) */
  const std::vector<std::int64_t>& first() const noexcept { return first_; }

private:
  Box covered_;
  double eta_ = 0.0;
  Vec anchor_;
  std::vector<std::int64_t> first_;
  std::vector<std::int64_t> counts_;
  std::size_t size_ = 0;
};

/*
 * Per-axis inclusive ranges of grid indices. May extend outside the grid
 * (negative or >= counts) when the covered lattice region leaves the box.
 */
struct IndexRange {
  MultiIndex lo;
  MultiIndex hi;

  bool empty() const;
  std::size_t count() const;
};

/*
 * Lattice cells (ignoring the covered box) whose closed hypercube meets the
 * closed ball center + radius*B.
 */
IndexRange lattice_ball_range(const Grid& g, std::span<const double> center, double radius);

/*
 * Lattice cells whose center lies within `radius` of `center`.
 * Equivalent to lattice_ball_range with radius - eta/2.
 */
IndexRange lattice_center_range(const Grid& g, std::span<const double> center, double radius);

/* clip a range to the grid; empty range when disjoint */
IndexRange clip(const Grid& g, const IndexRange& r);

/* calls fn(cell_id) for each in-grid cell of the range, row-major order */
template <class Fn>
void for_each_cell(const Grid& g, const IndexRange& r, Fn&& fn);

/*
 * ball_cover: the grid cells whose closed cell hypercube intersects the
 * closed ball center + radius*B. Sorted flat ids.
 */
std::vector<std::size_t> ball_cover(const Grid& g, std::span<const double> center, double radius);

template <class Fn>
void for_each_cell(const Grid& g, const IndexRange& r, Fn&& fn) {
  IndexRange c = clip(g, r);
  if (c.empty()) return;
  const std::size_t n = g.dim();
  MultiIndex k = c.lo;
  while (true) {
    fn(g.flatten(k));
    std::size_t axis = n;
    while (axis > 0) {
      --axis;
      if (k[axis] < c.hi[axis]) {
        ++k[axis];
        break;
      }
      k[axis] = c.lo[axis];
      if (axis == 0) return;
    }
    if (n == 0) return;
  }
}

}  // namespace certabs

#endif
