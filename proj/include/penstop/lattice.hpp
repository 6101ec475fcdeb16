#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace penstop {

/// Uniform one-dimensional state lattice.
class StateGrid {
 public:
  /// Points lower, lower+spacing, ..., up to `upper` (inclusive when it lies
  /// on the lattice within 1e-9 spacings).
  static StateGrid uniform(double lower, double upper, double spacing);

  /// Takes explicit points; they must be strictly increasing and uniformly
  /// spaced (relative tolerance 1e-9), at least two of them.
  explicit StateGrid(std::vector<double> points);

  std::size_t size() const noexcept { return points_.size(); }
  double spacing() const noexcept { return spacing_; }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const noexcept { return points_; }
  double lower() const noexcept { return points_.front(); }
  double upper() const noexcept { return points_.back(); }

  /// Index of the lattice point nearest to x (clamped to the grid).
  std::size_t nearest(double x) const noexcept;
  /// Index of the point equal to x within `tol` spacings, if any.
  std::optional<std::size_t> find(double x, double tol = 1e-6) const noexcept;

  bool operator==(const StateGrid&) const = default;

 private:
  StateGrid() = default;
  std::vector<double> points_;
  double spacing_ = 0.0;
};

enum class Label : std::uint8_t { Interior, Boundary, Exterior };

const char* to_string(Label label) noexcept;

/// A state lattice with each point classified relative to the open region O.
class RegionGrid {
 public:
  RegionGrid(StateGrid grid, std::vector<Label> labels, std::vector<std::string> warnings = {});

  const StateGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::span<const Label> labels() const noexcept { return labels_; }

  /// Stored label of point `index`; throws std::out_of_range.
  Label classify(std::size_t index) const;
  bool interior(std::size_t index) const noexcept { return labels_[index] == Label::Interior; }

  std::size_t count(Label label) const noexcept;
  /// Non-fatal validation messages, e.g. an empty exterior.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Distance from point `index` to the nearest non-Interior point (0 for
  /// non-Interior points, +inf when every point is Interior).
  double distance_to_exit(std::size_t index) const;

 private:
  StateGrid grid_;
  std::vector<Label> labels_;
  std::vector<std::string> warnings_;
};

using StatePredicate = std::function<bool(double)>;

/// Labels each point: Interior where the predicate holds, Boundary for
/// non-interior points within one spacing of an interior point, Exterior
/// otherwise. Throws ConfigError when no point is interior; an empty
/// exterior is recorded as a warning (the exit time is then infinite).
RegionGrid build_region(const StateGrid& grid, const StatePredicate& interior);

/// Label of a point as a free function, matching the region's `classify`.
Label classify(const RegionGrid& region, std::size_t index);

/// Time discretisation. `slices` steps of length `h` starting at `t0`; an
/// unbounded grid has no horizon and `slices` == 0.
struct TimeGrid {
  double t0 = 0.0;
  double h = 0.0;
  std::size_t slices = 0;
  bool bounded = false;

  static TimeGrid finite(double t0, double horizon, double h);
  static TimeGrid unbounded(double t0, double h);

  double horizon() const noexcept { return static_cast<double>(slices) * h; }
  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * h; }
};

}  // namespace penstop
