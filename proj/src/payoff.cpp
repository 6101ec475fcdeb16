#include "penstop/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "penstop/error.hpp"

namespace penstop {

const char* to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::ExitConstrained: return "exit";
    case Mode::GeneralF: return "general";
    case Mode::InfiniteHorizon: return "infinite";
    case Mode::FiniteHorizon: return "finite";
  }
  return "?";
}

const char* to_string(BoundaryConvention convention) noexcept {
  switch (convention) {
    case BoundaryConvention::UseG: return "G";
    case BoundaryConvention::UseH: return "H";
    case BoundaryConvention::UseMax: return "max";
  }
  return "?";
}

void PayoffSpec::validate() const {
  if (!running.eval || !stop.eval || !exit.eval) throw ConfigError("payoff: f, G and H must all be set");
  if (mode == Mode::FiniteHorizon) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("payoff: alpha must be >= 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw ConfigError("payoff: finite-horizon mode needs a positive finite horizon");
    }
  } else {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("payoff: alpha must be > 0");
    if (!running.time_homogeneous || !stop.time_homogeneous || !exit.time_homogeneous) {
      throw ConfigError(std::string("payoff: mode '") + to_string(mode) +
                        "' requires time-homogeneous payoffs");
    }
  }
}

double effective_F(const PayoffSpec& spec, const RegionGrid& region, double t, std::size_t i) {
  const double x = region.grid()[i];
  switch (region.classify(i)) {
    case Label::Interior: return spec.stop(t, x);
    case Label::Exterior: return spec.exit(t, x);
    case Label::Boundary:
      switch (spec.boundary) {
        case BoundaryConvention::UseG: return spec.stop(t, x);
        case BoundaryConvention::UseH: return spec.exit(t, x);
        case BoundaryConvention::UseMax: return std::max(spec.stop(t, x), spec.exit(t, x));
      }
  }
  return 0.0;
}

double functional_value(const PayoffSpec& spec, const RegionGrid& region, const TransitionKernel& kernel,
                        std::span<const std::size_t> path, std::size_t stop_step, double s0) {
  if (path.empty()) throw std::invalid_argument("functional_value: empty path");
  const double h = kernel.h();
  const std::size_t last = path.size() - 1;

  std::size_t exit_step = kNeverStop;
  if (spec.exit_constrained()) {
    for (std::size_t k = 0; k <= last; ++k) {
      if (!region.interior(path[k])) {
        exit_step = k;
        break;
      }
    }
  }
  std::size_t horizon_step = kNeverStop;
  if (spec.mode == Mode::FiniteHorizon) {
    const double remaining = std::max(0.0, spec.horizon - s0);
    horizon_step = static_cast<std::size_t>(std::llround(remaining / h));
  }
  const std::size_t K = std::min({stop_step, exit_step, horizon_step, last});

  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = s0 + static_cast<double>(k) * h;
    total += std::exp(-spec.alpha * static_cast<double>(k) * h) * spec.running(t, region.grid()[path[k]]) * h;
  }
  double tK = s0 + static_cast<double>(K) * h;
  const double x = region.grid()[path[K]];
  double terminal = 0.0;
  switch (spec.mode) {
    case Mode::ExitConstrained:
      terminal = (K == exit_step) ? spec.exit(tK, x) : spec.stop(tK, x);
      break;
    case Mode::GeneralF:
    case Mode::InfiniteHorizon:
      terminal = effective_F(spec, region, tK, path[K]);
      break;
    case Mode::FiniteHorizon:
      tK = std::min(tK, spec.horizon);
      terminal = effective_F(spec, region, tK, path[K]);
      break;
  }
  return total + std::exp(-spec.alpha * static_cast<double>(K) * h) * terminal;
}

double sup_norm(const PayoffFunction& fn, const StateGrid& grid, std::span<const double> times) {
  double m = 0.0;
  for (double t : times) {
    for (double x : grid.points()) m = std::max(m, std::abs(fn(t, x)));
  }
  return m;
}

namespace builtin {

PayoffFunction constant(double value) {
  std::ostringstream os;
  os << "constant(" << value << ")";
  return {os.str(), [value](double, double) { return value; }, true};
}

PayoffFunction exp_min(double cap, double scale, double shift) {
  std::ostringstream os;
  os << "exp_min(cap=" << cap << ",scale=" << scale << ",shift=" << shift << ")";
  return {os.str(), [=](double, double x) { return scale * std::min(std::exp(x - shift), cap); }, true};
}

PayoffFunction sine_bump(double base, double amp, double left, double right) {
  if (!(right > left)) throw ConfigError("sine_bump: right must exceed left");
  std::ostringstream os;
  os << "sine_bump(base=" << base << ",amp=" << amp << ",left=" << left << ",right=" << right << ")";
  return {os.str(),
          [=](double, double x) {
            if (x < left || x > right) return base;
            return base + amp * std::sin(std::numbers::pi * (x - left) / (right - left));
          },
          true};
}

PayoffFunction linear(double a, double b) {
  std::ostringstream os;
  os << "linear(" << a << "+" << b << "x)";
  return {os.str(), [=](double, double x) { return a + b * x; }, true};
}

PayoffFunction step(double at, double left_value, double right_value) {
  std::ostringstream os;
  os << "step(at=" << at << "," << left_value << "|" << right_value << ")";
  return {os.str(), [=](double, double x) { return x < at ? left_value : right_value; }, true};
}

}  // namespace builtin

namespace {

struct PayoffTable {
  // time -> (sorted states, values)
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> slices;

  double operator()(double t, double x) const {
    auto it = slices.upper_bound(t);
    if (it != slices.begin()) --it;
    const auto& [xs, vs] = it->second;
    if (x <= xs.front()) return vs.front();
    if (x >= xs.back()) return vs.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return (1.0 - w) * vs[lo] + w * vs[hi];
  }
};

}  // namespace

PayoffFunction load_payoff_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("payoff table: cannot open '" + path + "'");
  std::map<double, std::map<double, double>> raw;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("time", 0) == 0) continue;
    }
    std::istringstream ls(line);
    double t = 0, x = 0, v = 0;
    char c1 = 0, c2 = 0;
    if (!(ls >> t >> c1 >> x >> c2 >> v) || c1 != ',' || c2 != ',' || !std::isfinite(v)) {
      throw ConfigError("payoff table '" + path + "': malformed line " + std::to_string(lineno));
    }
    raw[t][x] = v;
  }
  if (raw.empty()) throw ConfigError("payoff table '" + path + "' has no rows");
  auto table = std::make_shared<PayoffTable>();
  for (const auto& [t, row] : raw) {
    auto& [xs, vs] = table->slices[t];
    for (const auto& [x, v] : row) {
      xs.push_back(x);
      vs.push_back(v);
    }
  }
  const bool homogeneous = raw.size() == 1;
  return {"table(" + path + ")", [table](double t, double x) { return (*table)(t, x); }, homogeneous};
}

}  // namespace penstop
