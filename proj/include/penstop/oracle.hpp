#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"
#include "penstop/payoff.hpp"

namespace penstop {

enum class OracleMethod { SnellBackward, ControlEnum };

const char* to_string(OracleMethod method) noexcept;

struct OracleResult {
  OracleMethod method = OracleMethod::SnellBackward;
  /// Row-major (slice, state); slice 0 is the start time.
  std::size_t slices = 1;
  std::size_t states = 0;
  std::vector<double> values;
  /// Bound on |oracle - infinite-horizon value| from truncating the horizon
  /// (0 in FiniteHorizon mode, where the recursion is exact).
  double truncation_slack = 0.0;
  std::string instance_hash;

  double at(std::size_t slice, std::size_t state) const { return values[slice * states + state]; }
  /// Values at the start time.
  std::vector<double> start_values() const { return {values.begin(), values.begin() + static_cast<long>(states)}; }
};

/// Backward-induction Snell envelope of the discrete stopping problem over
/// `horizon_steps` steps. Terminal slice is the stop payoff; each earlier
/// slice is max(stop payoff, h d0 f + d0 P w_next), d0 = 1/(1 + alpha h).
/// States outside the interior are frozen at the exit value in the exit
/// modes. FiniteHorizon mode ignores `horizon_steps` and runs to the
/// horizon. With keep_all_slices == false only the start slice is stored.
OracleResult snell_backward(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                            std::size_t horizon_steps, double t0 = 0.0, bool keep_all_slices = true);

/// Smallest step count whose truncation tail d0^N (|f|/alpha + |G| + |H|)
/// is below `slack` for a time-homogeneous problem.
std::size_t snell_steps_for_slack(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                                  double slack);

struct ControlEnumOptions {
  /// Control values are beta j/(levels-1), j = 0..levels-1; 2 is bang-bang.
  std::size_t levels = 2;
  /// Refuse when levels^(controllable states * steps) exceeds this.
  double max_policies = 16'777'216.0;
};

/// Exhaustive search over Markov controls b(slice, state) in the level set
/// for the control representation of w^beta: under a fixed control,
///   v_k = (h f + h b F + P vbar_{k+1}) / (1 + (alpha + b) h).
/// Returns the pointwise maximum of v_0 over all controls. FiniteHorizon
/// starts from F(T) and is exact; the other modes start from zero with a
/// reported truncation slack (1 + alpha h)^-steps (|f|/alpha + max|F|).
/// Throws SizeGuardError with the policy count when the guard trips.
OracleResult control_enum(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                          double beta, std::size_t steps, const ControlEnumOptions& options = {}, double t0 = 0.0);

/// FNV-1a digest (hex) of the kernel, labels, payoffs on the grid and the
/// scalar parameters of an oracle call.
std::string instance_hash(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                          std::span<const double> extra);

}  // namespace penstop
