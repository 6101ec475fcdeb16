#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"
#include "penstop/payoff.hpp"
#include "penstop/penalty.hpp"

namespace penstop {

/// Boolean stopping mask over (time slice, state).
struct StoppingRegion {
  std::size_t slices = 1;
  std::size_t states = 0;
  double t0 = 0.0;
  double h = 0.0;
  std::vector<unsigned char> mask;
  double epsilon = 0.0;
  /// beta of the generating field; +inf for an exact value field.
  double source_beta = std::numeric_limits<double>::infinity();

  bool stop(std::size_t slice, std::size_t state) const { return mask[slice * states + state] != 0; }
  /// Number of Interior states in the mask at `slice`.
  std::size_t interior_count(const RegionGrid& region, std::size_t slice = 0) const;
  /// "slice,state,stop" CSV with a header row.
  void write_csv(std::ostream& os) const;
};

/// mask = [w <= F + epsilon], with F the effective stop payoff at the
/// slice time; non-Interior states are always stopping in the exit modes.
StoppingRegion build_region_eps(const ValueField& w, const PayoffSpec& spec, const RegionGrid& region,
                                double epsilon);

/// Same rule applied to a plain start-slice value vector (e.g. an oracle).
StoppingRegion build_region_eps(std::span<const double> w, const PayoffSpec& spec, const RegionGrid& region,
                                double epsilon, double t0, double h);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Sum of `v` by pairwise (cascade) summation; the order is fixed by the
/// length alone.
double pairwise_sum(std::span<const double> v);
/// Mean and standard error of samples, both accumulated pairwise.
Estimate summarize(std::span<const double> samples);

struct PolicyOptions {
  /// Paths still running after this many steps are stopped there.
  std::size_t max_steps = 1'000'000;
};

/// Monte-Carlo value of "stop at the first mask entry" from `start` at time
/// s0. Each path is seeded by (seed, path index) so the estimate does not
/// depend on the thread count. Requires n_paths >= 100.
Estimate evaluate_policy(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                         const StoppingRegion& stop_region, std::size_t start, double s0, std::size_t n_paths,
                         std::uint64_t seed, const PolicyOptions& options = {});

/// Monte-Carlo estimate of P(tau_O > eta) from `start`; eta must be a whole
/// number of steps. Exterior and Boundary starts give exactly 0.
Estimate estimate_exit_tail(const TransitionKernel& kernel, const RegionGrid& region, std::size_t start, double eta,
                            std::size_t n_paths, std::uint64_t seed);

}  // namespace penstop
