#include "penstop/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "penstop/chain.hpp"
#include "penstop/error.hpp"
#include "penstop/oracle.hpp"
#include "penstop/policy.hpp"
#include "penstop/reference.hpp"

namespace penstop {

using nlohmann::json;
namespace fs = std::filesystem;

const char* version() noexcept { return PENSTOP_VERSION; }

bool RunOutcome::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Writes files under the run directory; every CSV starts with a provenance
// comment followed by its header row.
class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    if (dir_.empty()) return;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  bool enabled() const { return !dir_.empty(); }

  void csv(const std::string& name, const std::string& body) const {
    write(name, "# penstop " + std::string(version()) + " config_hash=" + hash_ + "\n" + body);
  }

  void text(const std::string& name, const std::string& body) const { write(name, body); }

 private:
  void write(const std::string& name, const std::string& body) const {
    if (!enabled()) return;
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
  }

  fs::path dir_;
  std::string hash_;
};

std::string field_csv(const ValueField& w, const StateGrid& grid) {
  std::ostringstream os;
  os << "slice,state,x,value\n";
  for (std::size_t k = 0; k < w.slices; ++k) {
    for (std::size_t i = 0; i < w.states; ++i) os << k << ',' << i << ',' << num(grid[i]) << ',' << num(w.at(k, i)) << '\n';
  }
  return os.str();
}

struct Instance {
  StateGrid grid;
  RegionGrid region;
  TransitionKernel kernel;
  PayoffSpec spec;
};

Instance build_instance(const RunConfig& c) {
  if (c.mode == RunMode::Benchmark) {
    const BrownianExample ex{c.benchmark.alpha, c.benchmark.lower, c.benchmark.spacing};
    return Instance{ex.grid(), ex.region(), ex.kernel(), ex.payoff()};
  }
  StateGrid grid = StateGrid::uniform(c.lower, c.upper, c.spacing);
  const RegionConfig& rc = c.region;
  StatePredicate pred;
  if (rc.predicate == "below") {
    pred = [u = rc.upper](double x) { return x < u; };
  } else if (rc.predicate == "above") {
    pred = [l = rc.lower](double x) { return x > l; };
  } else if (rc.predicate == "interval") {
    pred = [l = rc.lower, u = rc.upper](double x) { return x > l && x < u; };
  } else {
    pred = [](double) { return true; };
  }
  RegionGrid region = build_region(grid, pred);

  const auto drift = [&](double x) { return c.chain.drift(c.t0, x); };
  const auto vol = [&](double x) { return c.chain.vol(c.t0, x); };
  double h = c.chain.h;
  if (h == 0.0) {
    const double dx = grid.spacing();
    double worst = 0.0;
    for (double x : grid.points()) {
      const double s = vol(x);
      worst = std::max(worst, s * s / (dx * dx) + std::abs(drift(x)) / dx);
    }
    if (!(worst > 0.0)) throw ConfigError("config: 'chain/vol' must be positive");
    h = 1.0 / worst;
  }
  TransitionKernel kernel = build_diffusion_chain(grid, drift, vol, h);
  if (c.chain.jump_rate > 0.0) {
    if (c.chain.jump_rate * h > 1.0) throw ConfigError("config: 'chain/jump_rate' times h exceeds 1");
    kernel = add_jumps(kernel, c.chain.jump_rate, uniform_jump_law(grid, c.chain.jump_lower, c.chain.jump_upper));
  }
  if (c.payoff.mode == Mode::FiniteHorizon) {
    const double r = (c.payoff.horizon - c.t0) / h;
    if (!(r >= 1.0) || std::abs(r - std::round(r)) > 1e-9 * r) {
      std::ostringstream os;
      os.precision(17);
      os << "config: 'payoff/horizon' - run/t0 must be a positive whole number of steps h=" << h;
      throw ConfigError(os.str());
    }
  }
  return Instance{std::move(grid), std::move(region), std::move(kernel), c.payoff};
}

std::string beta_label(double beta) {
  std::ostringstream os;
  os.precision(17);
  os << beta;
  return os.str();
}

}  // namespace

RunOutcome execute_run(const ConfigSource& source, const fs::path& output_dir) {
  const RunConfig cfg = RunConfig::from_source(source);
  const Instance inst = build_instance(cfg);
  const ArtifactWriter out(output_dir, cfg.config_hash);

  RunOutcome outcome;
  outcome.config_hash = cfg.config_hash;
  outcome.states.assign(inst.grid.points().begin(), inst.grid.points().end());
  outcome.warnings = inst.region.warnings();

  json summary;
  summary["version"] = version();
  summary["config_hash"] = cfg.config_hash;
  summary["mode"] = to_string(cfg.mode);
  summary["seed"] = cfg.seed;
  summary["t0"] = cfg.t0;
  summary["grid"] = {{"lower", inst.grid.lower()},
                     {"upper", inst.grid.upper()},
                     {"spacing", inst.grid.spacing()},
                     {"states", inst.grid.size()},
                     {"interior", inst.region.count(Label::Interior)},
                     {"boundary", inst.region.count(Label::Boundary)},
                     {"exterior", inst.region.count(Label::Exterior)}};
  summary["kernel"] = {{"h", inst.kernel.h()}, {"description", inst.kernel.description()}};
  summary["warnings"] = outcome.warnings;

  if (cfg.chain.dump_kernel && out.enabled()) {
    std::ostringstream os;
    inst.kernel.write_csv(os);
    out.csv("kernel.csv", os.str());
  }

  // Solve.
  const PenaltyProblem problem{inst.kernel, inst.region, inst.spec, cfg.t0};
  SweepReport sweep = beta_sweep(problem, cfg.solver);
  {
    std::ostringstream conv;
    conv << "beta,iters,residual,error_bound,wall_time\n";
    json betas = json::array();
    for (std::size_t k = 0; k < sweep.fields.size(); ++k) {
      const ValueField& w = sweep.fields[k];
      out.csv("value_beta_" + beta_label(w.beta) + ".csv", field_csv(w, inst.grid));
      conv << num(w.beta) << ',' << w.iters << ',' << num(w.residual) << ',' << num(w.error_bound) << ','
           << num(sweep.wall_seconds[k]) << '\n';
      betas.push_back({{"beta", w.beta}, {"iters", w.iters}, {"residual", w.residual}, {"error_bound", w.error_bound}});
    }
    out.csv("convergence.csv", conv.str());
    summary["betas"] = betas;
    summary["worst_monotonicity_gap"] = sweep.worst_monotonicity_gap;
    if (sweep.first_meeting_target) {
      summary["first_beta_meeting_target"] = sweep.fields[*sweep.first_meeting_target].beta;
    } else {
      summary["first_beta_meeting_target"] = nullptr;
    }
    summary["target_error"] = cfg.solver.target_error;
  }
  const ValueField& best = sweep.fields.back();

  const StoppingRegion stop_region = build_region_eps(best, inst.spec, inst.region, cfg.policy.epsilon);
  {
    std::ostringstream os;
    stop_region.write_csv(os);
    out.csv("stopping_region.csv", os.str());
    summary["stopping_region"] = {{"beta", best.beta},
                                  {"epsilon", cfg.policy.epsilon},
                                  {"interior_stop_states", stop_region.interior_count(inst.region)}};
  }

  // Oracle sandwich.
  if (cfg.oracle.enabled) {
    const bool finite = inst.spec.mode == Mode::FiniteHorizon;
    std::size_t steps = cfg.oracle.steps;
    if (!finite && steps == 0) steps = snell_steps_for_slack(inst.kernel, inst.region, inst.spec, cfg.oracle.slack);
    const OracleResult snell = snell_backward(inst.kernel, inst.region, inst.spec, steps, cfg.t0, false);
    double solver_slack = 0.0;
    if (!finite) {
      const double q = PenalizedOperator(inst.kernel, inst.region, inst.spec, best.beta, cfg.t0).contraction_factor();
      solver_slack = best.residual * q / (1.0 - q);
    }
    const double slack = snell.truncation_slack + solver_slack;
    double worst_upper = -std::numeric_limits<double>::infinity();
    double worst_lower = -std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "slice,state,x,value\n";
    for (std::size_t i = 0; i < snell.states; ++i) {
      const double w = best.at(0, i);
      worst_upper = std::max(worst_upper, w - (snell.values[i] + slack));
      worst_lower = std::max(worst_lower, (snell.values[i] - best.error_bound - slack) - w);
      os << 0 << ',' << i << ',' << num(inst.grid[i]) << ',' << num(snell.values[i]) << '\n';
    }
    out.csv("oracle_snell.csv", os.str());
    const bool ok = worst_upper <= 0.0 && worst_lower <= 0.0;
    std::ostringstream detail;
    detail.precision(6);
    detail << "max(w - snell - slack) = " << worst_upper << ", max(snell - E - slack - w) = " << worst_lower
           << ", slack = " << slack;
    outcome.assertions.push_back({"oracle_sandwich", ok, detail.str()});
    summary["oracle"] = {{"method", to_string(snell.method)},
                         {"steps", steps},
                         {"truncation_slack", snell.truncation_slack},
                         {"solver_slack", solver_slack},
                         {"instance_hash", snell.instance_hash},
                         {"max_upper_violation", worst_upper},
                         {"max_lower_violation", worst_lower}};
  }

  // Policy evaluation and exit-tail diagnostic.
  if (!cfg.policy.starts.empty()) {
    json entries = json::array();
    PolicyOptions options;
    options.max_steps = cfg.policy.max_steps;
    for (std::size_t k = 0; k < cfg.policy.starts.size(); ++k) {
      const std::size_t i = inst.grid.nearest(cfg.policy.starts[k]);
      const std::uint64_t seed = path_seed(cfg.seed, k);
      const Estimate est = evaluate_policy(inst.kernel, inst.region, inst.spec, stop_region, i, cfg.t0,
                                           cfg.policy.n_paths, seed, options);
      const double w = best.at(0, i);
      const double shortfall = w - cfg.policy.epsilon - 4.0 * est.std_error - cfg.policy.slack - est.mean;
      json e = {{"x", inst.grid[i]},
                {"state", i},
                {"label", to_string(inst.region.classify(i))},
                {"w_beta", w},
                {"estimate", est.mean},
                {"std_error", est.std_error},
                {"n_paths", est.n},
                {"shortfall", shortfall}};
      if (cfg.policy.eta > 0.0) {
        const Estimate tail =
            estimate_exit_tail(inst.kernel, inst.region, i, cfg.policy.eta, cfg.policy.n_paths, path_seed(seed, 1));
        e["exit_tail"] = {{"eta", cfg.policy.eta}, {"estimate", tail.mean}, {"std_error", tail.std_error}};
      }
      entries.push_back(e);
      std::ostringstream detail;
      detail.precision(6);
      detail << "x=" << inst.grid[i] << ": estimate " << est.mean << " +- " << est.std_error << " vs w " << w;
      std::ostringstream name;
      name << "policy_eps_optimal@x=" << inst.grid[i];
      outcome.assertions.push_back({name.str(), shortfall <= 0.0, detail.str()});
    }
    json policy = {{"epsilon", cfg.policy.epsilon},
                   {"source_beta", best.beta},
                   {"seed", cfg.seed},
                   {"slack", cfg.policy.slack},
                   {"starts", entries}};
    out.text("policy.json", policy.dump(2) + "\n");
  }

  // Closed-form benchmark.
  if (cfg.mode == RunMode::Benchmark) {
    const BrownianExample ex{cfg.benchmark.alpha, cfg.benchmark.lower, cfg.benchmark.spacing};
    const auto samples = cfg.benchmark.samples.empty() ? default_example_samples() : cfg.benchmark.samples;
    const ExampleReport rep = verify_example(ex, inst.region, best, samples, cfg.benchmark.slack);
    std::ostringstream os;
    rep.write_csv(os);
    out.csv("reference.csv", os.str());
    json rows = json::array();
    for (const auto& r : rep.rows) {
      rows.push_back({{"x", r.x}, {"G", r.G}, {"sup_l", r.sup_l}, {"t_star", r.t_star}, {"w_beta", r.w_beta}, {"gap", r.gap}});
    }
    json ref = {{"alpha", ex.alpha},
                {"lower", ex.lower},
                {"spacing", ex.spacing},
                {"beta", rep.beta},
                {"max_deficit", rep.max_deficit},
                {"slack", rep.slack},
                {"interior_stop_states", rep.interior_stop_count},
                {"stop_layer_width", rep.stop_layer_width},
                {"stop_set_attached_to_boundary", rep.stop_set_attached_to_boundary},
                {"rows", rows}};
    out.text("reference.json", ref.dump(2) + "\n");
    summary["reference"] = ref;

    std::ostringstream d1, d2, d3;
    d1.precision(6);
    d1 << "max(sup_l - w_beta) = " << rep.max_deficit << " (slack " << rep.slack << ")";
    outcome.assertions.push_back({"example_w_above_sup_l", rep.dominates_sup_l, d1.str()});
    double min_gap = std::numeric_limits<double>::infinity();
    double min_gap_x = 0.0;
    for (const auto& r : rep.rows) {
      if (r.gap < min_gap) {
        min_gap = r.gap;
        min_gap_x = r.x;
      }
    }
    d2.precision(6);
    d2 << "min(w_beta - G) = " << min_gap << " at x=" << min_gap_x;
    outcome.assertions.push_back({"example_gap_positive", rep.positive_gap, d2.str()});
    d3.precision(6);
    d3 << rep.interior_stop_count << " interior states with w_beta <= G, width " << rep.stop_layer_width
       << (rep.stop_set_attached_to_boundary ? ", attached to the boundary" : ", not attached to the boundary")
       << " (limit " << cfg.benchmark.max_layer_width << ")";
    const bool layer_ok = rep.stop_set_attached_to_boundary && rep.stop_layer_width <= cfg.benchmark.max_layer_width;
    outcome.assertions.push_back({"example_stop_set_boundary_layer", layer_ok, d3.str()});
  }

  json asserts = json::array();
  for (const auto& a : outcome.assertions) asserts.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  summary["assertions"] = asserts;
  summary["passed"] = outcome.passed();
  outcome.summary_json = summary.dump(2);
  out.text("summary.json", outcome.summary_json + "\n");
  outcome.fields = std::move(sweep.fields);
  return outcome;
}

namespace {

struct CsvField {
  std::size_t slices = 0;
  // (slice, x) -> value
  std::map<std::pair<std::size_t, double>, double> values;
  std::vector<double> xs;
};

CsvField read_field(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  CsvField f;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "slice,state,x,value") throw ConfigError("compare: '" + path.string() + "' is not a value file");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::size_t slice = 0, state = 0;
    double x = 0, v = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ls >> slice >> c1 >> state >> c2 >> x >> c3 >> v)) {
      throw ConfigError("compare: malformed line " + std::to_string(lineno) + " in '" + path.string() + "'");
    }
    f.slices = std::max(f.slices, slice + 1);
    f.values[{slice, x}] = v;
    if (slice == 0) f.xs.push_back(x);
  }
  return f;
}

std::vector<std::string> value_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("compare: '" + dir.string() + "' is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if ((name.rfind("value_beta_", 0) == 0 && entry.path().extension() == ".csv") || name == "oracle_snell.csv") {
      names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

void CompareReport::write_text(std::ostream& os) const {
  const auto old = os.precision(6);
  for (const auto& f : files) {
    os << f.file << ": sup|a-b| = " << f.sup_diff << " at slice " << f.argmax_slice << ", x=" << f.argmax_x << " ("
       << f.common_points << " common points)\n";
  }
  for (const auto& n : only_in_a) os << n << ": only in the first run\n";
  for (const auto& n : only_in_b) os << n << ": only in the second run\n";
  os << "overall sup|a-b| = " << sup_diff << '\n';
  os.precision(old);
}

CompareReport compare_runs(const fs::path& a, const fs::path& b, const fs::path& details) {
  const auto names_a = value_files(a);
  const auto names_b = value_files(b);
  CompareReport report;
  std::vector<std::string> common;
  std::set_intersection(names_a.begin(), names_a.end(), names_b.begin(), names_b.end(), std::back_inserter(common));
  std::set_difference(names_a.begin(), names_a.end(), names_b.begin(), names_b.end(),
                      std::back_inserter(report.only_in_a));
  std::set_difference(names_b.begin(), names_b.end(), names_a.begin(), names_a.end(),
                      std::back_inserter(report.only_in_b));
  if (common.empty()) throw ConfigError("compare: the runs share no value file");

  std::ostringstream rows;
  rows << "file,slice,x,value_a,value_b,diff\n";
  for (const auto& name : common) {
    const CsvField fa = read_field(a / name);
    const CsvField fb = read_field(b / name);
    if (fa.slices != fb.slices) {
      throw ConfigError("compare: lattice mismatch in " + name + " (" + std::to_string(fa.slices) + " vs " +
                        std::to_string(fb.slices) + " slices)");
    }
    // Match points of the coarser lattice against the finer one.
    const double sa = fa.xs.size() > 1 ? (fa.xs.back() - fa.xs.front()) / static_cast<double>(fa.xs.size() - 1) : 1.0;
    const double sb = fb.xs.size() > 1 ? (fb.xs.back() - fb.xs.front()) / static_cast<double>(fb.xs.size() - 1) : 1.0;
    const double tol = 1e-7 * std::min(sa, sb);
    FieldDiff diff;
    diff.file = name;
    diff.sup_diff = 0.0;
    for (const auto& [key, va] : fa.values) {
      const auto [slice, x] = key;
      auto it = fb.values.lower_bound({slice, x - tol});
      if (it == fb.values.end() || it->first.first != slice || std::abs(it->first.second - x) > tol) continue;
      const double d = it->second - va;
      ++diff.common_points;
      if (std::abs(d) > diff.sup_diff || diff.common_points == 1) {
        diff.sup_diff = std::abs(d);
        diff.argmax_slice = slice;
        diff.argmax_x = x;
      }
      rows << name << ',' << slice << ',' << num(x) << ',' << num(va) << ',' << num(it->second) << ',' << num(d) << '\n';
    }
    if (diff.common_points == 0) throw ConfigError("compare: lattice mismatch in " + name + " (no common point)");
    report.sup_diff = std::max(report.sup_diff, diff.sup_diff);
    report.files.push_back(diff);
  }
  if (!details.empty()) {
    std::ofstream out(details, std::ios::binary | std::ios::trunc);
    out << rows.str();
    out.close();
    if (!out) throw IoError("cannot write '" + details.string() + "'");
  }
  return report;
}

}  // namespace penstop
