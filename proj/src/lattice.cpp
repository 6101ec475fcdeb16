#include "penstop/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "penstop/error.hpp"

namespace penstop {

StateGrid StateGrid::uniform(double lower, double upper, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("grid spacing must be positive and finite");
  }
  if (!(upper > lower)) throw std::invalid_argument("grid upper must exceed lower");
  const double span = (upper - lower) / spacing;
  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = lower + static_cast<double>(i) * spacing;
  // Snap the last point when the range is a whole number of spacings.
  if (std::abs(span - std::round(span)) < 1e-9) pts.back() = upper;
  return StateGrid(std::move(pts));
}

StateGrid::StateGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("state grid needs at least 2 points");
  spacing_ = (points_.back() - points_.front()) / static_cast<double>(points_.size() - 1);
  if (!(spacing_ > 0.0)) throw std::invalid_argument("state grid points must be increasing");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double step = points_[i] - points_[i - 1];
    if (!(step > 0.0)) throw std::invalid_argument("state grid points must be strictly increasing");
    if (std::abs(step - spacing_) > 1e-7 * spacing_) {
      throw std::invalid_argument("state grid must be uniform");
    }
  }
}

std::size_t StateGrid::nearest(double x) const noexcept {
  const double r = std::round((x - points_.front()) / spacing_);
  if (r <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(r);
  return std::min(i, points_.size() - 1);
}

std::optional<std::size_t> StateGrid::find(double x, double tol) const noexcept {
  const std::size_t i = nearest(x);
  if (std::abs(points_[i] - x) <= tol * spacing_) return i;
  return std::nullopt;
}

const char* to_string(Label label) noexcept {
  switch (label) {
    case Label::Interior: return "interior";
    case Label::Boundary: return "boundary";
    case Label::Exterior: return "exterior";
  }
  return "?";
}

RegionGrid::RegionGrid(StateGrid grid, std::vector<Label> labels, std::vector<std::string> warnings)
    : grid_(std::move(grid)), labels_(std::move(labels)), warnings_(std::move(warnings)) {
  if (labels_.size() != grid_.size()) {
    throw std::invalid_argument("region labels must match the grid size");
  }
  if (count(Label::Interior) == 0) throw ConfigError("region has no interior point");
}

Label RegionGrid::classify(std::size_t index) const {
  if (index >= labels_.size()) {
    std::ostringstream os;
    os << "state index " << index << " out of range [0, " << labels_.size() << ")";
    throw std::out_of_range(os.str());
  }
  return labels_[index];
}

std::size_t RegionGrid::count(Label label) const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

double RegionGrid::distance_to_exit(std::size_t index) const {
  if (classify(index) != Label::Interior) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (labels_[j] != Label::Interior) best = std::min(best, std::abs(grid_[j] - grid_[index]));
  }
  return best;
}

RegionGrid build_region(const StateGrid& grid, const StatePredicate& interior) {
  const std::size_t n = grid.size();
  std::vector<Label> labels(n, Label::Exterior);
  for (std::size_t i = 0; i < n; ++i) {
    if (interior(grid[i])) labels[i] = Label::Interior;
  }
  const double reach = grid.spacing() * (1.0 + 1e-9);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == Label::Interior) continue;
    const bool left = i > 0 && labels[i - 1] == Label::Interior && grid[i] - grid[i - 1] <= reach;
    const bool right = i + 1 < n && labels[i + 1] == Label::Interior && grid[i + 1] - grid[i] <= reach;
    if (left || right) labels[i] = Label::Boundary;
  }
  std::vector<std::string> warnings;
  if (std::none_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Interior; })) {
    throw ConfigError("region predicate selects no interior point");
  }
  if (std::all_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Interior; })) {
    warnings.emplace_back("no exterior: exit time infinite");
  }
  return RegionGrid(grid, std::move(labels), std::move(warnings));
}

Label classify(const RegionGrid& region, std::size_t index) { return region.classify(index); }

TimeGrid TimeGrid::finite(double t0, double horizon, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (t0 < 0.0) throw std::invalid_argument("t0 must be non-negative");
  const double r = horizon / h;
  const double k = std::round(r);
  if (std::abs(r - k) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument("horizon must be a whole number of time steps");
  }
  return TimeGrid{t0, h, static_cast<std::size_t>(k), true};
}

TimeGrid TimeGrid::unbounded(double t0, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("time step must be positive");
  return TimeGrid{t0, h, 0, false};
}

}  // namespace penstop
