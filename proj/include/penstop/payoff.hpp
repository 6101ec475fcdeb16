#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"

namespace penstop {

/// A bounded payoff (t, x) -> real, either a named built-in or a table.
struct PayoffFunction {
  std::string name;
  std::function<double(double, double)> eval;
  bool time_homogeneous = true;

  double operator()(double t, double x) const { return eval(t, x); }
};

enum class BoundaryConvention { UseG, UseH, UseMax };

enum class Mode { ExitConstrained, GeneralF, InfiniteHorizon, FiniteHorizon };

const char* to_string(Mode mode) noexcept;
const char* to_string(BoundaryConvention convention) noexcept;

/// Discount, running payoff f, stop payoff G (inside O), exit payoff H, and
/// the convention choosing F on discrete boundary points.
struct PayoffSpec {
  double alpha = 1.0;
  PayoffFunction running;
  PayoffFunction stop;
  PayoffFunction exit;
  BoundaryConvention boundary = BoundaryConvention::UseMax;
  Mode mode = Mode::ExitConstrained;
  /// Only meaningful in FiniteHorizon mode.
  double horizon = std::numeric_limits<double>::infinity();

  /// alpha > 0 (>= 0 in FiniteHorizon), finite horizon in FiniteHorizon,
  /// time-homogeneous data in InfiniteHorizon. Throws ConfigError.
  void validate() const;
  bool exit_constrained() const noexcept {
    return mode == Mode::ExitConstrained || mode == Mode::GeneralF;
  }
};

/// G on Interior, H on Exterior, and the convention's choice on Boundary.
double effective_F(const PayoffSpec& spec, const RegionGrid& region, double t, std::size_t i);

/// Sentinel stop step meaning "never stop voluntarily".
inline constexpr std::size_t kNeverStop = std::numeric_limits<std::size_t>::max();

/// Discounted payoff collected along one sampled path x_0..x_L started at
/// time s0:
///   sum_{k<K} e^{-alpha k h} f(s0 + k h, x_k) h + e^{-alpha K h} * terminal,
/// with K = min(stop_step, first exit step (exit modes), horizon steps
/// (finite mode), L). Terminal is G when stopped inside O, H at the exit
/// (ExitConstrained; exit wins ties), and effective_F otherwise. A path
/// that ends before any of these events is stopped at its last point.
double functional_value(const PayoffSpec& spec, const RegionGrid& region, const TransitionKernel& kernel,
                        std::span<const std::size_t> path, std::size_t stop_step, double s0);

/// Sup norm of a payoff over the grid at the given times.
double sup_norm(const PayoffFunction& fn, const StateGrid& grid, std::span<const double> times);

namespace builtin {

PayoffFunction constant(double value);
/// scale * min(e^{x - shift}, cap).
PayoffFunction exp_min(double cap, double scale = 1.0, double shift = 0.0);
/// base + amp * sin(pi (x - left) / (right - left)) on [left, right], base outside.
PayoffFunction sine_bump(double base, double amp, double left, double right);
/// a + b x.
PayoffFunction linear(double a, double b);
/// left_value for x < at, right_value for x >= at.
PayoffFunction step(double at, double left_value, double right_value);

}  // namespace builtin

/// Table payoff from CSV with columns time,state,value. Piecewise constant
/// in time (latest time <= t, earliest if t precedes all), linear in state
/// between tabulated points, clamped beyond them.
PayoffFunction load_payoff_csv(const std::string& path);

}  // namespace penstop
