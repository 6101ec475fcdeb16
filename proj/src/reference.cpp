#include "penstop/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "penstop/error.hpp"
#include "penstop/parallel.hpp"

namespace penstop {

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double closed_form_l(double t, double x, double alpha) {
  if (!(x < 1.0)) throw std::invalid_argument("closed_form_l: x must be below 1");
  if (!(t >= 0.0)) throw std::invalid_argument("closed_form_l: t must be non-negative");
  if (t == 0.0) return std::exp(x);
  const double s = std::sqrt(t);
  return std::exp((0.5 - alpha) * t + x) * normal_cdf((1.0 - x - t) / s);
}

SupL sup_l(double x, double alpha, double t_max, std::size_t scan_points) {
  if (scan_points < 3) throw std::invalid_argument("sup_l: need at least 3 scan points");
  const double dt = t_max / static_cast<double>(scan_points);
  std::size_t best = 1;
  double best_val = closed_form_l(dt, x, alpha);
  for (std::size_t j = 2; j <= scan_points; ++j) {
    const double v = closed_form_l(dt * static_cast<double>(j), x, alpha);
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  double a = dt * static_cast<double>(best - 1);
  double b = std::min(t_max, dt * static_cast<double>(best + 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = closed_form_l(c, x, alpha), fd = closed_form_l(d, x, alpha);
  while (b - a > 1e-10) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = closed_form_l(c, x, alpha);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = closed_form_l(d, x, alpha);
    }
  }
  SupL out{0.5 * (a + b), closed_form_l(0.5 * (a + b), x, alpha)};
  if (best_val > out.l_star) out = {dt * static_cast<double>(best), best_val};
  return out;
}

void BrownianExample::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("example: alpha must lie in (0, 1/2)");
  if (!(spacing > 0.0)) throw ConfigError("example: spacing must be positive");
  if (!(lower < 1.0 - spacing)) throw ConfigError("example: lower edge must lie below 1");
}

StateGrid BrownianExample::grid() const {
  validate();
  // Count whole spacings down from 1 so that 1 is a lattice point.
  const auto n = static_cast<std::size_t>(std::floor((1.0 - lower) / spacing + 1e-9));
  std::vector<double> pts(n + 1);
  for (std::size_t i = 0; i <= n; ++i) pts[i] = 1.0 - static_cast<double>(n - i) * spacing;
  return StateGrid(std::move(pts));
}

RegionGrid BrownianExample::region() const {
  return build_region(grid(), [](double x) { return x < 1.0 - 1e-12; });
}

TransitionKernel BrownianExample::kernel() const {
  return build_diffusion_chain(
      grid(), [](double) { return 0.0; }, [](double) { return 1.0; }, spacing * spacing);
}

PayoffSpec BrownianExample::payoff() const {
  PayoffSpec spec;
  spec.alpha = alpha;
  spec.running = builtin::constant(0.0);
  spec.stop = builtin::exp_min(std::numbers::e);
  spec.exit = builtin::constant(0.0);
  spec.boundary = BoundaryConvention::UseH;
  spec.mode = Mode::ExitConstrained;
  return spec;
}

void ExampleReport::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "x,G,sup_l,w_beta_max,gap\n";
  for (const auto& r : rows) os << r.x << ',' << r.G << ',' << r.sup_l << ',' << r.w_beta << ',' << r.gap << '\n';
  os.precision(old);
}

std::vector<double> default_example_samples() {
  std::vector<double> xs;
  for (int k = 0; k < 20; ++k) xs.push_back(-2.9 + 0.2 * k);
  return xs;
}

ExampleReport verify_example(const BrownianExample& example, const RegionGrid& region, const ValueField& w,
                             const std::vector<double>& samples, double slack) {
  if (w.states != region.size()) throw std::invalid_argument("verify_example: field and region differ in size");
  const PayoffSpec spec = example.payoff();
  ExampleReport report;
  report.beta = w.beta;
  report.slack = slack;
  report.max_deficit = -std::numeric_limits<double>::infinity();
  report.positive_gap = true;
  for (double x0 : samples) {
    const std::size_t i = region.grid().nearest(x0);
    if (!region.interior(i)) {
      std::ostringstream os;
      os << "verify_example: sample x=" << x0 << " is not an interior lattice point";
      throw ConfigError(os.str());
    }
    ExampleRow row;
    row.x = region.grid()[i];
    row.G = spec.stop(0.0, row.x);
    const SupL s = sup_l(row.x, example.alpha);
    row.sup_l = s.l_star;
    row.t_star = s.t_star;
    row.w_beta = w.at(0, i);
    row.gap = row.w_beta - row.G;
    report.max_deficit = std::max(report.max_deficit, row.sup_l - row.w_beta);
    report.positive_gap = report.positive_gap && row.gap > 0.0;
    report.rows.push_back(row);
  }
  report.dominates_sup_l = report.max_deficit <= slack;

  const StoppingRegion stop = build_region_eps(w, spec, region, 0.0);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region.interior(i) && stop.stop(0, i)) members.push_back(i);
  }
  report.interior_stop_count = members.size();
  report.stop_layer_width = static_cast<double>(members.size()) * region.grid().spacing();
  if (!members.empty()) {
    const bool contiguous = members.back() - members.front() + 1 == members.size();
    const std::size_t next = members.back() + 1;
    report.stop_set_attached_to_boundary = contiguous && next < region.size() && !region.interior(next);
  }
  return report;
}

Estimate mc_l(const TransitionKernel& kernel, const StateGrid& grid, std::size_t start, double t, double alpha,
              std::size_t n_paths, std::uint64_t seed) {
  if (start >= grid.size() || kernel.size() != grid.size()) throw std::invalid_argument("mc_l: bad start or sizes");
  const double r = t / kernel.h();
  if (!(t >= 0.0) || std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument("mc_l: t must be a whole number of steps");
  }
  const auto steps = static_cast<std::size_t>(std::llround(r));
  const double discount = std::exp(-alpha * t);
  std::vector<double> samples(n_paths);
  parallel_for(
      n_paths,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
          PathRng rng(seed, p);
          std::size_t x = start;
          for (std::size_t k = 0; k < steps; ++k) x = step(kernel, x, rng);
          samples[p] = grid[x] < 1.0 ? discount * std::exp(grid[x]) : 0.0;
        }
      },
      256);
  return summarize(samples);
}

}  // namespace penstop
