#include "penstop/policy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "penstop/parallel.hpp"

namespace penstop {

namespace {
constexpr std::size_t kPathChunk = 256;
}

std::size_t StoppingRegion::interior_count(const RegionGrid& region, std::size_t slice) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < states; ++i) {
    if (region.interior(i) && stop(slice, i)) ++c;
  }
  return c;
}

void StoppingRegion::write_csv(std::ostream& os) const {
  os << "slice,state,stop\n";
  for (std::size_t k = 0; k < slices; ++k) {
    for (std::size_t i = 0; i < states; ++i) os << k << ',' << i << ',' << (stop(k, i) ? 1 : 0) << '\n';
  }
}

StoppingRegion build_region_eps(const ValueField& w, const PayoffSpec& spec, const RegionGrid& region,
                                double epsilon) {
  if (w.states != region.size()) throw std::invalid_argument("build_region_eps: field and region differ in size");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("build_region_eps: epsilon must be >= 0");
  StoppingRegion r;
  r.slices = w.slices;
  r.states = w.states;
  r.t0 = w.t0;
  r.h = w.h;
  r.epsilon = epsilon;
  r.source_beta = w.beta;
  r.mask.assign(w.values.size(), 0);
  const bool timed = spec.mode == Mode::FiniteHorizon;
  for (std::size_t k = 0; k < w.slices; ++k) {
    const double t = timed ? w.t0 + static_cast<double>(k) * w.h : w.t0;
    for (std::size_t i = 0; i < w.states; ++i) {
      const bool forced = spec.exit_constrained() && !region.interior(i);
      r.mask[k * w.states + i] = forced || w.at(k, i) <= effective_F(spec, region, t, i) + epsilon;
    }
  }
  return r;
}

StoppingRegion build_region_eps(std::span<const double> w, const PayoffSpec& spec, const RegionGrid& region,
                                double epsilon, double t0, double h) {
  ValueField field;
  field.states = w.size();
  field.t0 = t0;
  field.h = h;
  field.values.assign(w.begin(), w.end());
  field.beta = std::numeric_limits<double>::infinity();
  return build_region_eps(field, spec, region, epsilon);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

Estimate summarize(std::span<const double> samples) {
  Estimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
  if (e.n > 1) {
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
    const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
    e.std_error = std::sqrt(var / static_cast<double>(e.n));
  }
  return e;
}

Estimate evaluate_policy(const TransitionKernel& kernel, const RegionGrid& region, const PayoffSpec& spec,
                         const StoppingRegion& stop_region, std::size_t start, double s0, std::size_t n_paths,
                         std::uint64_t seed, const PolicyOptions& options) {
  if (n_paths < 100) throw std::invalid_argument("evaluate_policy needs at least 100 paths");
  if (start >= region.size()) throw std::out_of_range("evaluate_policy: start index out of range");
  if (stop_region.states != region.size() || kernel.size() != region.size()) {
    throw std::invalid_argument("evaluate_policy: region, mask and kernel sizes differ");
  }
  const double h = kernel.h();
  const long long shift = std::llround((s0 - stop_region.t0) / h);
  const std::size_t offset = shift > 0 ? static_cast<std::size_t>(shift) : 0;
  std::size_t limit = options.max_steps;
  if (spec.mode == Mode::FiniteHorizon) {
    limit = std::min<std::size_t>(limit, static_cast<std::size_t>(std::llround(std::max(0.0, spec.horizon - s0) / h)));
  }

  std::vector<double> samples(n_paths);
  parallel_for(
      n_paths,
      [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> path;
        for (std::size_t p = begin; p < end; ++p) {
          PathRng rng(seed, p);
          path.clear();
          path.push_back(start);
          std::size_t stop_step = kNeverStop;
          for (std::size_t k = 0;; ++k) {
            const std::size_t slice = std::min(offset + k, stop_region.slices - 1);
            const std::size_t x = path.back();
            const bool exited = spec.exit_constrained() && !region.interior(x);
            if (stop_region.stop(slice, x) || exited || k >= limit) {
              stop_step = k;
              break;
            }
            path.push_back(step(kernel, x, rng));
          }
          samples[p] = functional_value(spec, region, kernel, path, stop_step, s0);
        }
      },
      kPathChunk);
  return summarize(samples);
}

Estimate estimate_exit_tail(const TransitionKernel& kernel, const RegionGrid& region, std::size_t start, double eta,
                            std::size_t n_paths, std::uint64_t seed) {
  if (start >= region.size()) throw std::out_of_range("estimate_exit_tail: start index out of range");
  if (n_paths == 0) throw std::invalid_argument("estimate_exit_tail needs at least one path");
  const double h = kernel.h();
  const double r = eta / h;
  if (!(eta >= 0.0) || std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument("estimate_exit_tail: eta must be a whole number of steps");
  }
  const auto steps = static_cast<std::size_t>(std::llround(r));
  std::vector<double> samples(n_paths, 0.0);
  if (region.interior(start)) {
    parallel_for(
        n_paths,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t p = begin; p < end; ++p) {
            PathRng rng(seed, p);
            std::size_t x = start;
            bool survived = true;
            for (std::size_t k = 0; k < steps; ++k) {
              x = step(kernel, x, rng);
              if (!region.interior(x)) {
                survived = false;
                break;
              }
            }
            samples[p] = survived ? 1.0 : 0.0;
          }
        },
        kPathChunk);
  }
  return summarize(samples);
}

}  // namespace penstop
