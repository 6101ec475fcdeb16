#include "penstop/penalty.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "penstop/error.hpp"
#include "penstop/parallel.hpp"

namespace penstop {

namespace {

// Below this many states per worker the thread start-up costs more than the sweep.
constexpr std::size_t kMinChunk = 8192;

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void check_sizes(const TransitionKernel& kernel, const RegionGrid& region) {
  if (kernel.size() != region.size()) {
    std::ostringstream os;
    os << "penalty_solver: kernel has " << kernel.size() << " states but the region has " << region.size();
    throw ConfigError(os.str());
  }
}

}  // namespace

void PenaltyConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("solver: tol must be positive");
  if (max_iters == 0) throw ConfigError("solver: max_iters must be positive");
  if (!(beta >= 0.0)) throw ConfigError("solver: beta must be non-negative");
  if (beta_schedule.empty()) throw ConfigError("solver: beta_schedule must not be empty");
  for (std::size_t k = 0; k < beta_schedule.size(); ++k) {
    if (!(beta_schedule[k] >= 0.0) || !std::isfinite(beta_schedule[k])) {
      throw ConfigError("solver: beta_schedule entries must be finite and non-negative");
    }
    if (k > 0 && !(beta_schedule[k] > beta_schedule[k - 1])) {
      throw ConfigError("solver: beta_schedule must be strictly increasing");
    }
  }
}

std::vector<double> PenaltyConfig::default_schedule() {
  std::vector<double> s;
  for (int k = 0; k <= 12; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

PenalizedOperator::PenalizedOperator(const TransitionKernel& kernel, const RegionGrid& region,
                                     const PayoffSpec& spec, double beta, double t)
    : kernel_(&kernel), alpha_(spec.alpha), beta_(beta), t_(t) {
  check_sizes(kernel, region);
  if (spec.mode == Mode::FiniteHorizon) {
    throw std::invalid_argument("PenalizedOperator: finite-horizon problems use solve_finite_horizon");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  const std::size_t n = region.size();
  f_.resize(n);
  obstacle_.resize(n);
  exit_.assign(n, 0.0);
  active_.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = region.grid()[i];
    f_[i] = spec.running(t, x);
    obstacle_[i] = effective_F(spec, region, t, i);
    if (spec.exit_constrained() && !region.interior(i)) {
      active_[i] = 0;
      exit_[i] = spec.mode == Mode::ExitConstrained ? spec.exit(t, x) : obstacle_[i];
    }
  }
}

double PenalizedOperator::contraction_factor() const noexcept {
  const double d = 1.0 / (1.0 + (alpha_ + beta_) * h());
  return beta_ * h() * d + d;
}

void PenalizedOperator::apply(std::span<const double> phi, std::span<double> out) const {
  const std::size_t n = size();
  if (phi.size() != n || out.size() != n) throw std::invalid_argument("operator: field size mismatch");
  std::vector<double> phibar(phi.begin(), phi.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (!active_[i]) phibar[i] = exit_[i];
  }
  apply_settled(phibar, out);
}

void PenalizedOperator::apply_settled(std::span<const double> phi, std::span<double> out) const {
  const std::size_t n = size();
  const double a = alpha_, b = beta_, hh = h();
  const auto& table = kernel_->table();
  auto body = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = active_[i] ? penalized_update(f_[i], obstacle_[i], phi[i], table.expect(i, phi), a, b, hh) : exit_[i];
    }
  };
  if (n < 2 * kMinChunk) {
    body(0, n);
  } else {
    parallel_for(n, body, kMinChunk);
  }
}

ValueField PenalizedOperator::apply(const ValueField& phi) const {
  if (phi.slices != 1 || phi.states != size()) throw std::invalid_argument("operator: field shape mismatch");
  ValueField out = phi;
  apply(phi.values, out.values);
  out.beta = beta_;
  out.error_bound = error_bound(out.values);
  return out;
}

ValueField PenalizedOperator::initial_field() const {
  ValueField w;
  w.states = size();
  w.h = h();
  w.t0 = t_;
  w.beta = beta_;
  w.values = exit_;
  return w;
}

double PenalizedOperator::error_bound(std::span<const double> w) const {
  double e = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (active_[i]) e = std::max(e, obstacle_[i] - w[i]);
  }
  return e;
}

namespace {

ValueField apply_checked(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                         const PayoffSpec& spec, double beta, Mode expected) {
  if (spec.mode != expected) {
    throw std::invalid_argument(std::string("operator expects mode '") + to_string(expected) + "', got '" +
                                to_string(spec.mode) + "'");
  }
  return PenalizedOperator(kernel, region, spec, beta, phi.t0).apply(phi);
}

}  // namespace

ValueField apply_operator_exit(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                               const PayoffSpec& spec, double beta) {
  return apply_checked(phi, kernel, region, spec, beta, Mode::ExitConstrained);
}

ValueField apply_operator_general_F(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                                    const PayoffSpec& spec, double beta) {
  return apply_checked(phi, kernel, region, spec, beta, Mode::GeneralF);
}

ValueField apply_operator_infinite(const ValueField& phi, const TransitionKernel& kernel, const RegionGrid& region,
                                   const PayoffSpec& spec, double beta) {
  return apply_checked(phi, kernel, region, spec, beta, Mode::InfiniteHorizon);
}

ValueField solve_fixed_point(const PenalizedOperator& op, const ValueField& init, const PenaltyConfig& cfg,
                             std::vector<double>* residual_log) {
  if (init.slices != 1 || init.states != op.size() || init.values.size() != op.size()) {
    throw std::invalid_argument("solve_fixed_point: initial field has the wrong shape");
  }
  if (!(cfg.tol > 0.0) || cfg.max_iters == 0) throw ConfigError("solver: tol and max_iters must be positive");

  std::vector<double> cur = init.values;
  std::vector<double> next(cur.size());
  double last = 0.0, previous = 0.0;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    // After the first sweep frozen states already hold their exit values.
    if (it == 1) {
      op.apply(cur, next);
    } else {
      op.apply_settled(cur, next);
    }
    previous = last;
    last = sup_diff(cur, next);
    if (residual_log != nullptr) residual_log->push_back(last);
    cur.swap(next);
    if (last <= cfg.tol) {
      ValueField w = op.initial_field();
      w.t0 = init.t0;
      w.values = std::move(cur);
      w.residual = last;
      w.iters = it;
      w.error_bound = op.error_bound(w.values);
      return w;
    }
  }
  std::ostringstream os;
  os.precision(6);
  os << "penalty_solver: no convergence after " << cfg.max_iters << " iterations at beta=" << op.beta()
     << "; last residual " << last << ", estimated contraction " << (previous > 0.0 ? last / previous : 0.0)
     << " (bound " << op.contraction_factor() << ")";
  throw NumericalError(os.str());
}

ValueField solve_finite_horizon(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                                double beta, double t0) {
  check_sizes(kernel, region);
  if (spec.mode != Mode::FiniteHorizon) throw std::invalid_argument("solve_finite_horizon needs FiniteHorizon mode");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  const double h = kernel.h();
  const TimeGrid tg = TimeGrid::finite(t0, spec.horizon - t0, h);
  const std::size_t n = region.size();

  ValueField w;
  w.slices = tg.slices + 1;
  w.states = n;
  w.t0 = t0;
  w.h = h;
  w.beta = beta;
  w.values.assign(w.slices * n, 0.0);

  std::vector<double> obstacle(n);
  auto fill_obstacle = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) obstacle[i] = effective_F(spec, region, t, i);
  };
  fill_obstacle(spec.horizon);
  std::copy(obstacle.begin(), obstacle.end(), w.slice(tg.slices).begin());
  double error = 0.0;

  for (std::size_t k = tg.slices; k-- > 0;) {
    const double t = tg.time(k);
    fill_obstacle(t);
    const auto ahead = w.slice(k + 1);
    auto here = w.slice(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = spec.running(t, region.grid()[i]);
      const double cont = kernel.expect(i, ahead);
      const double v = implicit_update(f, obstacle[i], cont, spec.alpha, beta, h);
      // The selected branch must be self-consistent up to rounding.
      const double check = penalized_update(f, obstacle[i], v, cont, spec.alpha, beta, h);
      if (std::abs(check - v) > 1e-9 * (1.0 + std::abs(v))) {
        std::ostringstream os;
        os << "penalty_solver: inconsistent implicit branch at slice " << k << ", state " << i;
        throw NumericalError(os.str());
      }
      here[i] = v;
      error = std::max(error, obstacle[i] - v);
    }
  }
  w.error_bound = error;
  return w;
}

ValueField solve(const PenaltyProblem& problem, double beta, const PenaltyConfig& cfg, const ValueField* warm_start) {
  if (problem.spec.mode == Mode::FiniteHorizon) {
    return solve_finite_horizon(problem.kernel, problem.region, problem.spec, beta, problem.t0);
  }
  const PenalizedOperator op(problem.kernel, problem.region, problem.spec, beta, problem.t0);
  return solve_fixed_point(op, warm_start != nullptr ? *warm_start : op.initial_field(), cfg);
}

SweepReport beta_sweep(const PenaltyProblem& problem, const PenaltyConfig& cfg) {
  cfg.validate();
  problem.spec.validate();
  SweepReport report;
  for (double beta : cfg.beta_schedule) {
    const auto start = std::chrono::steady_clock::now();
    const ValueField* warm = report.fields.empty() ? nullptr : &report.fields.back();
    ValueField w = solve(problem, beta, cfg, warm);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    if (warm != nullptr) {
      for (std::size_t j = 0; j < w.values.size(); ++j) {
        const double gap = warm->values[j] - w.values[j];
        report.worst_monotonicity_gap = std::max(report.worst_monotonicity_gap, gap);
        if (gap > 2.0 * cfg.tol) {
          std::ostringstream os;
          os.precision(17);
          os << "penalty_solver: monotonicity in beta violated between beta=" << warm->beta << " and beta=" << beta
             << " at slice " << j / w.states << ", state " << j % w.states << " (decrease " << gap << ")";
          throw NumericalError(os.str());
        }
      }
    }
    if (cfg.target_error > 0.0 && !report.first_meeting_target && w.error_bound <= cfg.target_error) {
      report.first_meeting_target = report.fields.size();
    }
    report.fields.push_back(std::move(w));
    report.wall_seconds.push_back(elapsed.count());
  }
  return report;
}

}  // namespace penstop
