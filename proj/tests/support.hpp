#pragma once

// Random small instances shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"
#include "penstop/payoff.hpp"

namespace penstop::testing {

/// Payoff that reads a per-state value off the grid (time-homogeneous).
inline PayoffFunction tabulated(const StateGrid& grid, std::vector<double> values, std::string name = "tab") {
  auto data = std::make_shared<std::vector<double>>(std::move(values));
  auto g = std::make_shared<StateGrid>(grid);
  return {std::move(name), [data, g](double, double x) { return (*data)[g->nearest(x)]; }, true};
}

struct Instance {
  StateGrid grid;
  RegionGrid region;
  TransitionKernel kernel;
  PayoffSpec spec;
};

struct InstanceShape {
  std::size_t min_states = 3;
  std::size_t max_states = 100;
  double min_alpha_h = 0.02;
  double max_alpha_h = 0.5;
  std::size_t max_row_support = 4;
  Mode mode = Mode::ExitConstrained;
  /// Number of slices for FiniteHorizon instances.
  std::size_t horizon_steps = 10;
};

/// Random chain on n points: each row spreads over a few random columns,
/// the first and last points are non-interior, and interior points may be
/// scattered. Payoffs are random in [-1, 2].
inline Instance random_instance(std::mt19937_64& rng, const InstanceShape& shape) {
  std::uniform_int_distribution<std::size_t> n_dist(shape.min_states, shape.max_states);
  const std::size_t n = n_dist(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  StateGrid grid = StateGrid::uniform(0.0, static_cast<double>(n - 1), 1.0);

  std::vector<StochasticTable::Row> rows(n);
  std::uniform_int_distribution<std::size_t> col(0, n - 1);
  std::uniform_int_distribution<std::size_t> support(1, shape.max_row_support);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = support(rng);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 0.1 + u(rng);
      // Bias towards neighbours so the chain actually moves through the region.
      const std::size_t neighbour = j % 2 == 0 ? std::min(i + 1, n - 1) : (i == 0 ? 0 : i - 1);
      const std::size_t c = u(rng) < 0.6 ? neighbour : col(rng);
      rows[i].push_back({c, w});
      total += w;
    }
    for (auto& [c, w] : rows[i]) w /= total;
    // Renormalise the rounding residue onto the first entry.
    double s = 0.0;
    for (auto& e : rows[i]) s += e.second;
    rows[i].front().second += 1.0 - s;
  }

  std::vector<Label> labels(n, Label::Interior);
  labels.front() = Label::Boundary;
  labels.back() = Label::Boundary;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (u(rng) < 0.1) labels[i] = Label::Boundary;
  }
  if (std::count(labels.begin(), labels.end(), Label::Interior) == 0) labels[n / 2] = Label::Interior;

  const double alpha = 0.2 + 1.8 * u(rng);
  const double alpha_h = shape.min_alpha_h + (shape.max_alpha_h - shape.min_alpha_h) * u(rng);
  const double h = alpha_h / alpha;

  std::vector<double> f(n), g(n), hv(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = -1.0 + 3.0 * u(rng);
    g[i] = -1.0 + 3.0 * u(rng);
    hv[i] = -1.0 + 3.0 * u(rng);
  }

  PayoffSpec spec;
  spec.alpha = alpha;
  spec.running = tabulated(grid, f, "f");
  spec.stop = tabulated(grid, g, "G");
  spec.exit = tabulated(grid, hv, "H");
  spec.mode = shape.mode;
  const auto conv = static_cast<int>(u(rng) * 3.0);
  spec.boundary = conv == 0 ? BoundaryConvention::UseG : conv == 1 ? BoundaryConvention::UseH : BoundaryConvention::UseMax;
  if (shape.mode == Mode::FiniteHorizon) spec.horizon = static_cast<double>(shape.horizon_steps) * h;

  RegionGrid region(grid, labels);
  TransitionKernel kernel(StochasticTable(rows), h, "random");
  return {std::move(grid), std::move(region), std::move(kernel), std::move(spec)};
}

inline double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace penstop::testing
