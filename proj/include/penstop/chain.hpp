#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "penstop/lattice.hpp"
#include "penstop/parallel.hpp"

namespace penstop {

/// Sparse row-stochastic table (CSR, columns sorted within each row).
class StochasticTable {
 public:
  using Row = std::vector<std::pair<std::size_t, double>>;

  StochasticTable() = default;
  /// Duplicate columns are merged, zero entries dropped. Rows must be
  /// non-negative and sum to 1 within 1e-12.
  explicit StochasticTable(const std::vector<Row>& rows);
  /// Dense row-major n x n table.
  static StochasticTable dense(std::span<const double> table, std::size_t n);

  std::size_t size() const noexcept { return row_start_.empty() ? 0 : row_start_.size() - 1; }
  std::span<const std::uint32_t> row_cols(std::size_t i) const noexcept {
    return {cols_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
  }
  std::span<const double> row_probs(std::size_t i) const noexcept {
    return {probs_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
  }
  /// p(i -> j); zero for absent entries.
  double prob(std::size_t i, std::size_t j) const noexcept;
  /// Sum_j p(i, j) v[j], accumulated in column order.
  double expect(std::size_t i, std::span<const double> v) const noexcept {
    const std::size_t b = row_start_[i], e = row_start_[i + 1];
    double acc = 0.0;
    for (std::size_t k = b; k < e; ++k) acc += probs_[k] * v[cols_[k]];
    return acc;
  }
  std::size_t nonzeros() const noexcept { return probs_.size(); }
  std::vector<Row> rows() const;

 private:
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> probs_;
};

/// One-step transition law of a Markov chain with time step h.
class TransitionKernel {
 public:
  TransitionKernel(StochasticTable table, double h, std::string description);

  const StochasticTable& table() const noexcept { return table_; }
  std::size_t size() const noexcept { return table_.size(); }
  double h() const noexcept { return h_; }
  const std::string& description() const noexcept { return description_; }
  double prob(std::size_t i, std::size_t j) const noexcept { return table_.prob(i, j); }
  double expect(std::size_t i, std::span<const double> v) const noexcept { return table_.expect(i, v); }

  /// "row,col,probability" lines with a header.
  void write_csv(std::ostream& os) const;

 private:
  StochasticTable table_;
  double h_;
  std::string description_;
};

using CoefficientFn = std::function<double(double)>;

/// Kushner-Dupuis nearest-neighbour chain for dX = mu(X) dt + sigma(X) dW.
/// Central-difference probabilities where sigma^2 >= |mu| dx, upwind
/// otherwise; both match the first moment exactly and the second to O(h^2)
/// (central) or O(h dx) (upwind). Edge rows reflect the outgoing mass back
/// into the grid. Throws ConfigError naming the worst point when
/// h (sigma^2/dx^2 + |mu|/dx) > 1 somewhere.
TransitionKernel build_diffusion_chain(const StateGrid& grid, const CoefficientFn& drift,
                                       const CoefficientFn& vol, double h);

/// (1 - rate h) kernel + rate h jump_law. Requires rate >= 0, rate h <= 1.
TransitionKernel add_jumps(const TransitionKernel& kernel, double rate, const StochasticTable& jump_law);

/// Jump law sending every state uniformly to the states with coordinates in
/// [lower, upper].
StochasticTable uniform_jump_law(const StateGrid& grid, double lower, double upper);

/// Draws the successor of `state`.
std::size_t step(const TransitionKernel& kernel, std::size_t state, PathRng& rng) noexcept;

/// Path of `steps` transitions from `start`, deterministic in (seed, path_index).
std::vector<std::size_t> sample_path(const TransitionKernel& kernel, std::size_t start, std::size_t steps,
                                     std::uint64_t seed, std::uint64_t path_index = 0);

struct RowMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the one-step increment from point i.
RowMoments row_moments(const TransitionKernel& kernel, const StateGrid& grid, std::size_t i);

}  // namespace penstop
