#include "penstop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "penstop/error.hpp"
#include "penstop/parallel.hpp"

namespace penstop {

const char* to_string(OracleMethod method) noexcept {
  return method == OracleMethod::SnellBackward ? "snell_backward" : "control_enum";
}

namespace {

// Payoff data tabulated at one time: which states evolve and what a frozen
// state is worth.
struct SliceData {
  std::vector<double> f;
  std::vector<double> stop;
  std::vector<double> exit;
  std::vector<unsigned char> active;

  SliceData(const RegionGrid& region, const PayoffSpec& spec, double t)
      : f(region.size()), stop(region.size()), exit(region.size(), 0.0), active(region.size(), 1) {
    for (std::size_t i = 0; i < region.size(); ++i) {
      const double x = region.grid()[i];
      f[i] = spec.running(t, x);
      stop[i] = effective_F(spec, region, t, i);
      if (spec.exit_constrained() && !region.interior(i)) {
        active[i] = 0;
        exit[i] = spec.mode == Mode::ExitConstrained ? spec.exit(t, x) : stop[i];
      }
    }
  }

  double norm(const std::vector<double>& v) const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void number(double v) { bytes(&v, sizeof v); }
  void number(std::uint64_t v) { bytes(&v, sizeof v); }
  std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << state_;
    return os.str();
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

void check_sizes(const TransitionKernel& kernel, const RegionGrid& region) {
  if (kernel.size() != region.size()) throw ConfigError("oracle: kernel and region sizes differ");
}

std::size_t finite_steps(const TransitionKernel& kernel, const PayoffSpec& spec, double t0) {
  return TimeGrid::finite(t0, spec.horizon - t0, kernel.h()).slices;
}

}  // namespace

std::string instance_hash(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                          std::span<const double> extra) {
  Fnv1a hash;
  hash.number(kernel.h());
  hash.number(static_cast<std::uint64_t>(kernel.size()));
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    const auto cols = kernel.table().row_cols(i);
    const auto probs = kernel.table().row_probs(i);
    hash.bytes(cols.data(), cols.size_bytes());
    hash.bytes(probs.data(), probs.size_bytes());
  }
  hash.bytes(region.labels().data(), region.labels().size_bytes());
  hash.bytes(region.grid().points().data(), region.grid().points().size_bytes());
  const SliceData data(region, spec, 0.0);
  hash.bytes(data.f.data(), data.f.size() * sizeof(double));
  hash.bytes(data.stop.data(), data.stop.size() * sizeof(double));
  hash.bytes(data.exit.data(), data.exit.size() * sizeof(double));
  hash.number(spec.alpha);
  hash.number(static_cast<std::uint64_t>(spec.mode));
  hash.number(static_cast<std::uint64_t>(spec.boundary));
  hash.number(spec.horizon);
  for (double v : extra) hash.number(v);
  return hash.hex();
}

std::size_t snell_steps_for_slack(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                                  double slack) {
  if (!(slack > 0.0)) throw std::invalid_argument("slack must be positive");
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("truncated Snell needs alpha > 0");
  const SliceData data(region, spec, 0.0);
  const double scale = data.norm(data.f) / spec.alpha + data.norm(data.stop) + data.norm(data.exit);
  if (scale <= slack) return 0;
  const double per_step = std::log1p(spec.alpha * kernel.h());
  return static_cast<std::size_t>(std::ceil(std::log(scale / slack) / per_step));
}

OracleResult snell_backward(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                            std::size_t horizon_steps, double t0, bool keep_all_slices) {
  check_sizes(kernel, region);
  const bool finite = spec.mode == Mode::FiniteHorizon;
  const std::size_t steps = finite ? finite_steps(kernel, spec, t0) : horizon_steps;
  const std::size_t n = region.size();
  const double h = kernel.h();
  const double d0 = 1.0 / (1.0 + spec.alpha * h);

  OracleResult out;
  out.method = OracleMethod::SnellBackward;
  out.states = n;
  out.slices = keep_all_slices ? steps + 1 : 1;
  out.values.assign(out.slices * n, 0.0);
  const double extra[] = {static_cast<double>(steps), t0};
  out.instance_hash = instance_hash(kernel, region, spec, extra);

  SliceData data(region, spec, finite ? spec.horizon : t0);
  std::vector<double> next(n), cur(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = data.active[i] ? data.stop[i] : data.exit[i];
  if (keep_all_slices) std::copy(next.begin(), next.end(), out.values.begin() + static_cast<long>(steps * n));

  for (std::size_t k = steps; k-- > 0;) {
    if (finite) data = SliceData(region, spec, t0 + static_cast<double>(k) * h);
    for (std::size_t i = 0; i < n; ++i) {
      if (!data.active[i]) {
        cur[i] = data.exit[i];
        continue;
      }
      const double cont = h * d0 * data.f[i] + d0 * kernel.expect(i, next);
      cur[i] = std::max(data.stop[i], cont);
    }
    next.swap(cur);
    if (keep_all_slices) std::copy(next.begin(), next.end(), out.values.begin() + static_cast<long>(k * n));
  }
  if (!keep_all_slices) std::copy(next.begin(), next.end(), out.values.begin());

  if (!finite) {
    const SliceData start(region, spec, t0);
    const double scale = start.norm(start.f) / spec.alpha + start.norm(start.stop) + start.norm(start.exit);
    out.truncation_slack = std::pow(d0, static_cast<double>(steps)) * scale;
  }
  return out;
}

OracleResult control_enum(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                          double beta, std::size_t steps, const ControlEnumOptions& options, double t0) {
  check_sizes(kernel, region);
  if (options.levels < 2) throw std::invalid_argument("control_enum needs at least 2 control levels");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  const bool finite = spec.mode == Mode::FiniteHorizon;
  if (finite) {
    const std::size_t horizon_steps = finite_steps(kernel, spec, t0);
    if (steps != horizon_steps) {
      throw std::invalid_argument("control_enum: steps must equal the number of slices to the horizon");
    }
  }
  if (!finite && !(spec.alpha > 0.0)) throw std::invalid_argument("control_enum: alpha must be positive");
  const std::size_t n = region.size();
  const double h = kernel.h();

  std::vector<SliceData> slices;
  slices.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    slices.emplace_back(region, spec, finite ? t0 + static_cast<double>(k) * h : t0);
  }
  std::vector<std::size_t> controllable;
  for (std::size_t i = 0; i < n; ++i) {
    if (slices[0].active[i]) controllable.push_back(i);
  }
  const std::size_t m = controllable.size();
  const double policies =
      std::pow(static_cast<double>(options.levels), static_cast<double>(m) * static_cast<double>(steps));
  if (policies > options.max_policies) {
    std::ostringstream os;
    os << "control_enum: " << options.levels << "^(" << m << " states x " << steps << " steps) = " << policies
       << " policies exceeds the guard of " << options.max_policies;
    throw SizeGuardError(os.str());
  }

  std::vector<double> level_values(options.levels);
  for (std::size_t j = 0; j < options.levels; ++j) {
    level_values[j] = beta * static_cast<double>(j) / static_cast<double>(options.levels - 1);
  }
  std::size_t per_slice = 1;
  for (std::size_t c = 0; c < m; ++c) per_slice *= options.levels;

  OracleResult out;
  out.method = OracleMethod::ControlEnum;
  out.states = n;
  out.slices = 1;
  const double extra[] = {beta, static_cast<double>(steps), static_cast<double>(options.levels), t0};
  out.instance_hash = instance_hash(kernel, region, spec, extra);

  std::vector<double> terminal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& last = slices[steps];
    terminal[i] = !last.active[i] ? last.exit[i] : (finite ? last.stop[i] : 0.0);
  }
  if (steps == 0) {
    out.values = terminal;
    return out;
  }

  // v_k under decision vector `code` (one digit per controllable state).
  auto step_back = [&](std::size_t k, std::size_t code, const std::vector<double>& ahead, std::vector<double>& v) {
    const auto& s = slices[k];
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.active[i]) v[i] = s.exit[i];
    }
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = controllable[c];
      const double b = level_values[code % options.levels];
      code /= options.levels;
      v[i] = (h * s.f[i] + h * b * s.stop[i] + kernel.expect(i, ahead)) / (1.0 + (spec.alpha + b) * h);
    }
  };

  // Depth-first over slices from the last one back to the start; each
  // worker owns a top-level range of decision vectors and its own maximum.
  const std::size_t workers = std::min(max_threads(), per_slice);
  std::vector<std::vector<double>> best(workers, std::vector<double>(n, -std::numeric_limits<double>::infinity()));
  const std::size_t chunk = (per_slice + workers - 1) / workers;
  parallel_for(workers, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      std::vector<std::vector<double>> stack(steps, std::vector<double>(n));
      auto& mine = best[w];
      auto descend = [&](auto&& self, std::size_t k, const std::vector<double>& ahead) -> void {
        auto& v = stack[k];
        for (std::size_t code = 0; code < per_slice; ++code) {
          step_back(k, code, ahead, v);
          if (k == 0) {
            for (std::size_t i = 0; i < n; ++i) mine[i] = std::max(mine[i], v[i]);
          } else {
            self(self, k - 1, v);
          }
        }
      };
      const std::size_t top = steps - 1;
      const std::size_t lo = w * chunk, hi = std::min(per_slice, lo + chunk);
      for (std::size_t code = lo; code < hi; ++code) {
        step_back(top, code, terminal, stack[top]);
        if (top == 0) {
          for (std::size_t i = 0; i < n; ++i) mine[i] = std::max(mine[i], stack[0][i]);
        } else {
          descend(descend, top - 1, stack[top]);
        }
      }
    }
  });

  out.values.assign(n, -std::numeric_limits<double>::infinity());
  for (const auto& b : best) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = std::max(out.values[i], b[i]);
  }
  if (!finite) {
    const auto& s = slices[0];
    const double scale = s.norm(s.f) / spec.alpha + std::max(s.norm(s.stop), s.norm(s.exit));
    out.truncation_slack = std::pow(1.0 + spec.alpha * h, -static_cast<double>(steps)) * scale;
  }
  return out;
}

}  // namespace penstop
