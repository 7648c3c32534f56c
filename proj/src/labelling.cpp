/*
 * labelling.cpp
 */

#include "certabs/labelling.hpp"

#include <set>
#include <stdexcept>

#include "certabs/parallel.hpp"

namespace certabs {

LabellingSpec::LabellingSpec(std::size_t dim, std::vector<Proposition> props)
    : dim_(dim), props_(std::move(props)) {
  if (props_.size() > PropSet::kMaxProps)
    throw std::invalid_argument("at most 64 propositions are supported");
  std::set<std::string> seen;
  for (const auto& p : props_) {
    if (p.name.empty()) throw std::invalid_argument("proposition with empty name");
    if (!seen.insert(p.name).second)
      throw std::invalid_argument("proposition '" + p.name + "' declared twice");
    for (const auto& b : p.region)
      if (b.dim() != dim_)
        throw std::invalid_argument("proposition '" + p.name + "' has a box of dimension " +
                                    std::to_string(b.dim()) + ", expected " + std::to_string(dim_));
  }
}

std::vector<std::string> LabellingSpec::names() const {
  std::vector<std::string> out;
  for (const auto& p : props_) out.push_back(p.name);
  return out;
}

std::optional<std::size_t> LabellingSpec::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < props_.size(); ++i)
    if (props_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> LabellingSpec::clip_to(const Box& bounds) {
  std::vector<std::string> warnings;
  for (auto& p : props_) {
    std::vector<Box> kept;
    for (const auto& b : p.region) {
      auto c = intersect(b, bounds);
      if (!c) {
        warnings.push_back("proposition '" + p.name + "': box " + to_string(b) +
                           " lies outside the state box and was dropped");
        continue;
      }
      if (!(*c == b))
        warnings.push_back("proposition '" + p.name + "': box " + to_string(b) + " clipped to " +
                           to_string(*c));
      kept.push_back(*c);
    }
    p.region = std::move(kept);
  }
  return warnings;
}

PropSet LabellingSpec::label(std::span<const double> x) const {
  PropSet s;
  for (std::size_t i = 0; i < props_.size(); ++i)
    for (const auto& b : props_[i].region)
      if (b.contains(x)) {
        s.insert(i);
        break;
      }
  return s;
}

std::string LabellingSpec::format(PropSet s) const {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < props_.size(); ++i)
    if (s.contains(i)) {
      if (!first) out += ", ";
      out += props_[i].name;
      first = false;
    }
  return out + "}";
}

LabellingSpec strengthen(const LabellingSpec& spec, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("strengthening radius must be >= 0");
  std::vector<Proposition> props;
  for (const auto& p : spec.propositions()) {
    Proposition q{p.name, {}};
    for (const auto& b : p.region)
      if (auto e = erode_box(b, eps)) q.region.push_back(*e);
    props.push_back(std::move(q));
  }
  return LabellingSpec(spec.dim(), std::move(props));
}

std::vector<PropSet> cell_label(const LabellingSpec& spec, const Grid& grid, unsigned jobs) {
  if (spec.dim() != grid.dim()) throw std::invalid_argument("labelling/grid dimension mismatch");
  std::vector<PropSet> out(grid.size());
  const auto& props = spec.propositions();
  parallel_for(grid.size(), jobs, [&](std::size_t id) {
    Box cell = grid.cell_box(id);
    PropSet s;
    for (std::size_t i = 0; i < props.size(); ++i)
      for (const auto& b : props[i].region)
        if (b.contains(cell)) {
          s.insert(i);
          break;
        }
    out[id] = s;
  });
  return out;
}

}  // namespace certabs
