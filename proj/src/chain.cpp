#include "penstop/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "penstop/error.hpp"

namespace penstop {

namespace {
constexpr double kRowSumTol = 1e-12;
}

StochasticTable::StochasticTable(const std::vector<Row>& rows) {
  const std::size_t n = rows.size();
  if (n == 0) throw std::invalid_argument("stochastic table needs at least one row");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("table too large");
  row_start_.reserve(n + 1);
  row_start_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::size_t, double> merged;
    for (const auto& [col, p] : rows[i]) {
      if (col >= n) {
        std::ostringstream os;
        os << "row " << i << " references column " << col << " outside [0, " << n << ")";
        throw std::invalid_argument(os.str());
      }
      if (!(p >= 0.0) || !std::isfinite(p)) {
        std::ostringstream os;
        os << "row " << i << " has a negative or non-finite probability " << p;
        throw std::invalid_argument(os.str());
      }
      merged[col] += p;
    }
    double sum = 0.0;
    for (const auto& [col, p] : merged) {
      if (p == 0.0) continue;
      cols_.push_back(static_cast<std::uint32_t>(col));
      probs_.push_back(p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i << " sums to " << sum << ", not 1";
      throw std::invalid_argument(os.str());
    }
    row_start_.push_back(probs_.size());
  }
}

StochasticTable StochasticTable::dense(std::span<const double> table, std::size_t n) {
  if (table.size() != n * n) throw std::invalid_argument("dense table must be n*n");
  std::vector<Row> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (table[i * n + j] != 0.0) rows[i].emplace_back(j, table[i * n + j]);
    }
  }
  return StochasticTable(rows);
}

double StochasticTable::prob(std::size_t i, std::size_t j) const noexcept {
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(j));
  if (it == cols.end() || *it != j) return 0.0;
  return row_probs(i)[static_cast<std::size_t>(it - cols.begin())];
}

std::vector<StochasticTable::Row> StochasticTable::rows() const {
  std::vector<Row> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto cols = row_cols(i);
    const auto probs = row_probs(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[i].emplace_back(cols[k], probs[k]);
  }
  return out;
}

TransitionKernel::TransitionKernel(StochasticTable table, double h, std::string description)
    : table_(std::move(table)), h_(h), description_(std::move(description)) {
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw std::invalid_argument("kernel time step must be positive");
  if (table_.size() == 0) throw std::invalid_argument("kernel has no states");
}

void TransitionKernel::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "row,col,probability\n";
  for (std::size_t i = 0; i < size(); ++i) {
    const auto cols = table_.row_cols(i);
    const auto probs = table_.row_probs(i);
    for (std::size_t k = 0; k < cols.size(); ++k) os << i << ',' << cols[k] << ',' << probs[k] << '\n';
  }
  os.precision(old);
}

TransitionKernel build_diffusion_chain(const StateGrid& grid, const CoefficientFn& drift,
                                       const CoefficientFn& vol, double h) {
  if (!(h > 0.0)) throw ConfigError("chain: time step h must be positive");
  const std::size_t n = grid.size();
  const double dx = grid.spacing();
  const double dx2 = dx * dx;

  double worst = -1.0;
  std::size_t worst_i = 0;
  std::vector<double> mu(n), sig2(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = drift(grid[i]);
    const double s = vol(grid[i]);
    if (!(s > 0.0) || !std::isfinite(s) || !std::isfinite(mu[i])) {
      std::ostringstream os;
      os << "chain: volatility must be positive and coefficients finite at x=" << grid[i];
      throw ConfigError(os.str());
    }
    sig2[i] = s * s;
    const double cfl = h * (sig2[i] / dx2 + std::abs(mu[i]) / dx);
    if (cfl > worst) {
      worst = cfl;
      worst_i = i;
    }
  }
  if (worst > 1.0 + 1e-12) {
    std::ostringstream os;
    os.precision(10);
    os << "chain: CFL condition violated, h*(sigma^2/dx^2 + |mu|/dx) = " << worst
       << " > 1 at x=" << grid[worst_i] << " (index " << worst_i << ")";
    throw ConfigError(os.str());
  }

  std::vector<StochasticTable::Row> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    double up = 0.0, down = 0.0;
    if (sig2[i] >= std::abs(mu[i]) * dx) {
      up = h * (sig2[i] + mu[i] * dx) / (2.0 * dx2);
      down = h * (sig2[i] - mu[i] * dx) / (2.0 * dx2);
    } else {
      up = h * (0.5 * sig2[i] + dx * std::max(mu[i], 0.0)) / dx2;
      down = h * (0.5 * sig2[i] + dx * std::max(-mu[i], 0.0)) / dx2;
    }
    const double stay = std::max(0.0, 1.0 - up - down);
    auto& row = rows[i];
    row.emplace_back(i, stay);
    // Reflect at the truncation edges.
    row.emplace_back(i + 1 < n ? i + 1 : i - 1, up);
    row.emplace_back(i > 0 ? i - 1 : i + 1, down);
    // Put the rounding residue of 1 - up - down on the largest entry, which
    // stays non-negative even when the stay probability is exactly zero.
    const double sum = stay + up + down;
    auto largest = std::max_element(row.begin(), row.end(),
                                    [](const auto& a, const auto& b) { return a.second < b.second; });
    largest->second += 1.0 - sum;
  }
  std::ostringstream desc;
  desc << "kushner-dupuis n=" << n << " dx=" << dx << " h=" << h;
  return TransitionKernel(StochasticTable(rows), h, desc.str());
}

TransitionKernel add_jumps(const TransitionKernel& kernel, double rate, const StochasticTable& jump_law) {
  if (!(rate >= 0.0)) throw std::invalid_argument("jump rate must be non-negative");
  const double w = rate * kernel.h();
  if (w > 1.0 + 1e-15) throw std::invalid_argument("jump rate times h must not exceed 1");
  if (jump_law.size() != kernel.size()) throw std::invalid_argument("jump law size must match the kernel");
  if (w == 0.0) return kernel;
  auto rows = kernel.table().rows();
  const auto jumps = jump_law.rows();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (auto& [col, p] : rows[i]) p *= (1.0 - w);
    for (const auto& [col, p] : jumps[i]) rows[i].emplace_back(col, w * p);
  }
  std::ostringstream desc;
  desc << kernel.description() << " + jumps(rate=" << rate << ")";
  return TransitionKernel(StochasticTable(rows), kernel.h(), desc.str());
}

StochasticTable uniform_jump_law(const StateGrid& grid, double lower, double upper) {
  std::vector<std::size_t> targets;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] >= lower - 1e-9 * grid.spacing() && grid[j] <= upper + 1e-9 * grid.spacing()) {
      targets.push_back(j);
    }
  }
  if (targets.empty()) throw ConfigError("jump law: no grid point inside the target interval");
  StochasticTable::Row row;
  const double p = 1.0 / static_cast<double>(targets.size());
  for (std::size_t j : targets) row.emplace_back(j, p);
  // Absorb the rounding of the uniform weights into the first target.
  double sum = 0.0;
  for (const auto& e : row) sum += e.second;
  row.front().second += 1.0 - sum;
  return StochasticTable(std::vector<StochasticTable::Row>(grid.size(), row));
}

std::size_t step(const TransitionKernel& kernel, std::size_t state, PathRng& rng) noexcept {
  const auto cols = kernel.table().row_cols(state);
  const auto probs = kernel.table().row_probs(state);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    acc += probs[k];
    if (u < acc) return cols[k];
  }
  return cols[cols.size() - 1];
}

std::vector<std::size_t> sample_path(const TransitionKernel& kernel, std::size_t start, std::size_t steps,
                                     std::uint64_t seed, std::uint64_t path_index) {
  if (start >= kernel.size()) throw std::out_of_range("sample_path: start index out of range");
  std::vector<std::size_t> path;
  path.reserve(steps + 1);
  path.push_back(start);
  PathRng rng(seed, path_index);
  for (std::size_t k = 0; k < steps; ++k) path.push_back(step(kernel, path.back(), rng));
  return path;
}

RowMoments row_moments(const TransitionKernel& kernel, const StateGrid& grid, std::size_t i) {
  const auto cols = kernel.table().row_cols(i);
  const auto probs = kernel.table().row_probs(i);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double dx = grid[cols[k]] - grid[i];
    m1 += probs[k] * dx;
    m2 += probs[k] * dx * dx;
  }
  return {m1, m2 - m1 * m1};
}

}  // namespace penstop
