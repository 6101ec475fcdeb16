#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"
#include "penstop/payoff.hpp"
#include "penstop/penalty.hpp"
#include "penstop/policy.hpp"

namespace penstop {

/// Standard normal CDF through erfc (absolute error well below 1e-15).
double normal_cdf(double z) noexcept;

/// l(t, x) = e^{(1/2 - alpha) t + x} Phi((1 - x - t)/sqrt t), the value of
/// stopping a Brownian motion at the fixed time t if it is then below 1;
/// l(0, x) = e^x. Throws std::invalid_argument for x >= 1 or t < 0.
double closed_form_l(double t, double x, double alpha);

struct SupL {
  double t_star = 0.0;
  double l_star = 0.0;
};

/// Maximum of l(., x) over (0, t_max]: a uniform scan with `scan_points`
/// points followed by golden-section refinement of the best bracket until
/// the bracket is narrower than 1e-10.
SupL sup_l(double x, double alpha, double t_max = 20.0, std::size_t scan_points = 4000);

/// Brownian motion, O = (-inf, 1) truncated at `lower`, G = min(e^x, e),
/// H = 0, f = 0. The chain is the driftless Kushner-Dupuis walk with
/// h = spacing^2.
struct BrownianExample {
  double alpha = 0.25;
  double lower = -8.0;
  double spacing = 0.02;

  void validate() const;
  StateGrid grid() const;
  RegionGrid region() const;
  TransitionKernel kernel() const;
  PayoffSpec payoff() const;
};

struct ExampleRow {
  double x = 0.0;
  double G = 0.0;
  double sup_l = 0.0;
  double t_star = 0.0;
  double w_beta = 0.0;
  /// w_beta - G.
  double gap = 0.0;
};

struct ExampleReport {
  std::vector<ExampleRow> rows;
  double beta = 0.0;
  /// max over samples of sup_l - w_beta (negative when w_beta dominates).
  double max_deficit = 0.0;
  /// Slack allowed for max_deficit.
  double slack = 0.0;
  /// Interior states where w_beta <= G (the epsilon = 0 stopping set).
  std::size_t interior_stop_count = 0;
  /// Those states form one block ending next to the boundary of O.
  bool stop_set_attached_to_boundary = true;
  /// Width of that block, in state units.
  double stop_layer_width = 0.0;
  bool dominates_sup_l = false;
  bool positive_gap = false;

  /// "x,G,sup_l,w_beta_max,gap" CSV with a header row.
  void write_csv(std::ostream& os) const;
};

/// Compares a solved value field of the example with sup_t l(t, x) at the
/// sample points (snapped to the lattice) and inspects the epsilon = 0
/// stopping region on the Interior.
ExampleReport verify_example(const BrownianExample& example, const RegionGrid& region, const ValueField& w,
                             const std::vector<double>& samples, double slack);

/// Default sample points -2.9, -2.7, ..., 0.9.
std::vector<double> default_example_samples();

/// Monte-Carlo estimate of E^x[e^{-alpha t} 1{X_t < 1} e^{X_t}] on a chain,
/// the expectation that closed_form_l evaluates exactly for Brownian motion.
Estimate mc_l(const TransitionKernel& kernel, const StateGrid& grid, std::size_t start, double t, double alpha,
              std::size_t n_paths, std::uint64_t seed);

}  // namespace penstop
