#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"
#include "penstop/payoff.hpp"

namespace penstop {

struct PenaltyConfig {
  double beta = 1.0;
  double tol = 1e-10;
  std::size_t max_iters = 1'000'000;
  std::vector<double> beta_schedule = default_schedule();
  /// Error bound that beta_sweep flags as met; <= 0 disables the flag.
  double target_error = 0.0;

  /// Throws ConfigError on tol <= 0, max_iters == 0, negative or
  /// non-increasing schedule.
  void validate() const;
  /// 2^0, 2^1, ..., 2^12.
  static std::vector<double> default_schedule();
};

/// Values over (time slice, state), row-major by slice. Time-homogeneous
/// modes store one slice.
struct ValueField {
  std::size_t slices = 1;
  std::size_t states = 0;
  double t0 = 0.0;
  double h = 0.0;
  std::vector<double> values;
  double beta = 0.0;
  double residual = 0.0;
  std::size_t iters = 0;
  double error_bound = 0.0;

  double at(std::size_t slice, std::size_t state) const { return values[slice * states + state]; }
  std::span<const double> slice(std::size_t k) const { return {values.data() + k * states, states}; }
  std::span<double> slice(std::size_t k) { return {values.data() + k * states, states}; }
};

/// One-state update of the penalized equation
///   w = A [f + beta max(obstacle, phi)] + d cont,  d = 1/(1 + (alpha+beta) h),  A = h d,
/// where `cont` is the expected next value. Templated so the same formula
/// can be checked in exact rational arithmetic.
template <class Real>
Real penalized_update(const Real& f, const Real& obstacle, const Real& phi, const Real& cont, const Real& alpha,
                      const Real& beta, const Real& h) {
  const Real d = Real(1) / (Real(1) + (alpha + beta) * h);
  const Real top = phi < obstacle ? obstacle : phi;
  return h * d * (f + beta * top) + d * cont;
}

/// Solves w = A [f + beta max(obstacle, w)] + d cont for w by testing both
/// branches of the max. Exactly one branch is self-consistent because
/// 1 - A beta = d (1 + alpha h) > 0.
template <class Real>
Real implicit_update(const Real& f, const Real& obstacle, const Real& cont, const Real& alpha, const Real& beta,
                     const Real& h) {
  const Real d = Real(1) / (Real(1) + (alpha + beta) * h);
  const Real a = h * d;
  const Real stopped = a * (f + beta * obstacle) + d * cont;
  if (!(obstacle < stopped)) return stopped;
  return (a * f + d * cont) / (Real(1) - a * beta);
}

/// The discrete penalized operator for the time-homogeneous modes.
///
/// States are either active (Interior in the exit modes, every state in
/// InfiniteHorizon) or frozen at an exit value (H in ExitConstrained,
/// effective_F in GeneralF). On active states
///   (T phi)(x) = A [f(x) + beta max(F(x), phi(x))] + d sum_y p(x,y) phibar(y)
/// with phibar = phi on active states and the exit value elsewhere.
class PenalizedOperator {
 public:
  /// Payoffs are tabulated at time t. FiniteHorizon is rejected (use
  /// solve_finite_horizon).
  PenalizedOperator(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec, double beta,
                    double t = 0.0);

  std::size_t size() const noexcept { return f_.size(); }
  double beta() const noexcept { return beta_; }
  double alpha() const noexcept { return alpha_; }
  double h() const noexcept { return kernel_->h(); }
  double t() const noexcept { return t_; }

  /// q = beta (1 - d)/(alpha + beta) + d; the sup-norm Lipschitz constant.
  double contraction_factor() const noexcept;

  void apply(std::span<const double> phi, std::span<double> out) const;
  ValueField apply(const ValueField& phi) const;
  /// apply() for a phi that already equals the exit values on frozen states.
  void apply_settled(std::span<const double> phi, std::span<double> out) const;

  /// Exit values on frozen states, zero elsewhere.
  ValueField initial_field() const;
  /// sup over active states of (obstacle - w)^+.
  double error_bound(std::span<const double> w) const;

  std::span<const double> obstacle() const noexcept { return obstacle_; }
  std::span<const double> exit_values() const noexcept { return exit_; }
  bool active(std::size_t i) const noexcept { return active_[i] != 0; }

 private:
  const TransitionKernel* kernel_;
  double alpha_;
  double beta_;
  double t_;
  std::vector<double> f_;
  std::vector<double> obstacle_;
  std::vector<double> exit_;
  std::vector<unsigned char> active_;
};

ValueField apply_operator_exit(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                               const PayoffSpec& spec, double beta);
ValueField apply_operator_general_F(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                                    const PayoffSpec& spec, double beta);
/// Infinite horizon has no exit; the region only shapes F through the
/// boundary convention.
ValueField apply_operator_infinite(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                                   const PayoffSpec& spec, double beta);

/// Jacobi iteration phi <- T phi until the sup-norm update is <= tol.
/// Successive update norms are appended to `residual_log` when given.
/// Throws NumericalError after max_iters with the last residual and the
/// observed ratio of the last two residuals.
ValueField solve_fixed_point(const PenalizedOperator& op, const ValueField& init, const PenaltyConfig& cfg,
                             std::vector<double>* residual_log = nullptr);

/// Backward recursion over slices t0, t0+h, ..., horizon with terminal slice
/// effective_F(T, .) and the pointwise-implicit update on earlier slices.
/// The horizon must be a whole number of steps from t0.
ValueField solve_finite_horizon(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                                double beta, double t0 = 0.0);

/// Everything needed to solve one instance at any beta.
struct PenaltyProblem {
  const TransitionKernel& kernel;
  const RegionGrid& region;
  const PayoffSpec& spec;
  double t0 = 0.0;
};

/// Solves the problem at a single beta (cfg.beta ignored).
ValueField solve(const PenaltyProblem& problem, double beta, const PenaltyConfig& cfg,
                 const ValueField* warm_start = nullptr);

struct SweepReport {
  std::vector<ValueField> fields;
  std::vector<double> wall_seconds;
  /// Index into `fields` of the first solution meeting cfg.target_error.
  std::optional<std::size_t> first_meeting_target;
  /// Largest violation of w^{beta_k} <= w^{beta_{k+1}} seen (<= 2 tol).
  double worst_monotonicity_gap = 0.0;
};

/// Solves every beta of the schedule, warm-starting from the previous
/// solution, and checks pointwise monotonicity in beta within 2 tol
/// (NumericalError otherwise).
SweepReport beta_sweep(const PenaltyProblem& problem, const PenaltyConfig& cfg);

}  // namespace penstop
