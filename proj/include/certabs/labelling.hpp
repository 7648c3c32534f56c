/*
 * labelling.hpp
 *
 * Atomic propositions over finite unions of closed boxes.
 */

#ifndef CERTABS_LABELLING_HPP_
#define CERTABS_LABELLING_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "certabs/geometry.hpp"

namespace certabs {

/* set of proposition indices into an alphabet of at most 64 names */
class PropSet {
public:
  static constexpr std::size_t kMaxProps = 64;

  PropSet() = default;
  explicit PropSet(std::uint64_t bits) : bits_(bits) {}

  bool contains(std::size_t i) const noexcept { return (bits_ >> i) & 1u; }
  void insert(std::size_t i) noexcept { bits_ |= std::uint64_t{1} << i; }
  void erase(std::size_t i) noexcept { bits_ &= ~(std::uint64_t{1} << i); }
  bool empty() const noexcept { return bits_ == 0; }
  bool subset_of(PropSet o) const noexcept { return (bits_ & ~o.bits_) == 0; }
  std::uint64_t bits() const noexcept { return bits_; }

  friend bool operator==(PropSet, PropSet) = default;

private:
  std::uint64_t bits_ = 0;
};

struct Proposition {
  std::string name;
  std::vector<Box> region;  // closed boxes, union
};

class LabellingSpec {
public:
  LabellingSpec() = default;
  LabellingSpec(std::size_t dim, std::vector<Proposition> props);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return props_.size(); }
  const std::vector<Proposition>& propositions() const noexcept { return props_; }
  const Proposition& operator[](std::size_t i) const { return props_[i]; }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(const std::string& name) const;

  /* clip every region to `bounds`; returns a warning per clipped or emptied box */
  std::vector<std::string> clip_to(const Box& bounds);

  /* pi in result iff x lies in pi's region (closed boxes) */
  PropSet label(std::span<const double> x) const;

  std::string format(PropSet s) const;

private:
  std::size_t dim_ = 0;
  std::vector<Proposition> props_;
};

/*
 * Erode every box of every region by eps. Exact eps-strengthening for
 * single-box regions; a subset of it for unions.
 */
LabellingSpec strengthen(const LabellingSpec& spec, double eps);

/*
 * Per grid cell: pi is assigned iff the closed cell is contained in one box
 * of pi's region, so the cell label is a subset of the label of every point
 * in the cell.
 */
std::vector<PropSet> cell_label(const LabellingSpec& spec, const Grid& grid, unsigned jobs = 1);

}  // namespace certabs

#endif
