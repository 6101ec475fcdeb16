#include "penstop/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "penstop/error.hpp"

namespace penstop {

namespace pt = boost::property_tree;

struct ConfigSource::Impl {
  pt::ptree tree;
  std::filesystem::path base_dir;
};

namespace {

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto slash = key.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == key.size() ||
      key.find('/', slash + 1) != std::string::npos) {
    throw ConfigError("config: key '" + key + "' must have the form section/key");
  }
  return {key.substr(0, slash), key.substr(slash + 1)};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// The INI reader only knows whole-line comments; drop "; ..." and "# ..."
// that follow whitespace so values can carry trailing remarks.
std::string strip_inline_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

ConfigSource::ConfigSource(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ConfigSource::ConfigSource(const ConfigSource& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}
ConfigSource& ConfigSource::operator=(const ConfigSource& other) {
  if (this != &other) impl_ = std::make_unique<Impl>(*other.impl_);
  return *this;
}
ConfigSource::ConfigSource(ConfigSource&&) noexcept = default;
ConfigSource& ConfigSource::operator=(ConfigSource&&) noexcept = default;
ConfigSource::~ConfigSource() = default;

ConfigSource ConfigSource::parse(const std::string& text, std::filesystem::path base_dir) {
  auto impl = std::make_unique<Impl>();
  impl->base_dir = std::move(base_dir);
  std::istringstream in(strip_inline_comments(text));
  try {
    pt::read_ini(in, impl->tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << "config: " << e.message() << " at line " << e.line();
    throw ConfigError(os.str());
  }
  return ConfigSource(std::move(impl));
}

ConfigSource ConfigSource::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.parent_path());
}

void ConfigSource::set(const std::string& key, const std::string& value) {
  const auto [section, name] = split_key(key);
  const auto sec = impl_->tree.find(section);
  auto& target =
      sec == impl_->tree.not_found() ? impl_->tree.push_back({section, pt::ptree()})->second : sec->second;
  const auto it = target.find(name);
  if (it != target.not_found()) {
    it->second.put_value(value);
  } else {
    target.push_back({name, pt::ptree(value)});
  }
}

std::optional<std::string> ConfigSource::get(const std::string& key) const {
  const auto [section, name] = split_key(key);
  const auto sec = impl_->tree.find(section);
  if (sec == impl_->tree.not_found()) return std::nullopt;
  const auto it = sec->second.find(name);
  if (it == sec->second.not_found()) return std::nullopt;
  return trim(it->second.data());
}

bool ConfigSource::has_section(const std::string& section) const {
  return impl_->tree.find(section) != impl_->tree.not_found();
}

const std::filesystem::path& ConfigSource::base_dir() const noexcept { return impl_->base_dir; }

std::string ConfigSource::canonical() const {
  std::ostringstream os;
  pt::write_ini(os, impl_->tree);
  return os.str();
}

std::string ConfigSource::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

const char* to_string(RunMode mode) noexcept {
  switch (mode) {
    case RunMode::Exit: return "exit";
    case RunMode::General: return "general";
    case RunMode::Infinite: return "infinite";
    case RunMode::Finite: return "finite";
    case RunMode::Benchmark: return "benchmark";
  }
  return "?";
}

RunMode parse_run_mode(const std::string& text) {
  static const std::map<std::string, RunMode> names = {{"exit", RunMode::Exit},
                                                       {"general", RunMode::General},
                                                       {"infinite", RunMode::Infinite},
                                                       {"finite", RunMode::Finite},
                                                       {"benchmark", RunMode::Benchmark}};
  const auto it = names.find(text);
  if (it == names.end()) {
    throw ConfigError("config: run/mode must be one of exit, general, infinite, finite, benchmark (got '" + text +
                      "')");
  }
  return it->second;
}

namespace {

// Typed access with "section/key" in every message.
class Reader {
 public:
  explicit Reader(const ConfigSource& src) : src_(src) {}

  bool has(const std::string& key) const { return src_.get(key).has_value(); }

  std::string text(const std::string& key) const {
    auto v = src_.get(key);
    if (!v || v->empty()) throw ConfigError("config: missing required key '" + key + "'");
    return *v;
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const { return parse_number(key, text(key)); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string s = text(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("config: '" + key + "' must be a non-negative integer (got '" + s + "')");
    }
    return v;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = text(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config: '" + key + "' must be true or false (got '" + s + "')");
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text(key));
    while (std::getline(in, item, ',')) out.push_back(parse_number(key, trim(item)));
    return out;
  }

  static double parse_number(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError("config: '" + key + "' must be a finite number (got '" + s + "')");
    }
    return v;
  }

  const ConfigSource& source() const { return src_; }

 private:
  const ConfigSource& src_;
};

// Builds a named built-in or table function from "section/name" and its
// "section/name.param" keys.
PayoffFunction make_function(const Reader& r, const std::string& section, const std::string& name) {
  const std::string key = section + "/" + name;
  const std::string kind = r.text(key);
  auto p = [&](const std::string& param) { return r.number(key + "." + param); };
  auto p_or = [&](const std::string& param, double fallback) { return r.number(key + "." + param, fallback); };
  if (kind == "constant") return builtin::constant(p("value"));
  if (kind == "exp_min") return builtin::exp_min(p_or("cap", std::numbers::e), p_or("scale", 1.0), p_or("shift", 0.0));
  if (kind == "sine_bump") return builtin::sine_bump(p("base"), p("amp"), p("left"), p("right"));
  if (kind == "linear") return builtin::linear(p("a"), p("b"));
  if (kind == "step") return builtin::step(p("at"), p("left"), p("right"));
  if (kind == "table") {
    std::filesystem::path path = r.text(key + ".path");
    if (path.is_relative()) path = r.source().base_dir() / path;
    return load_payoff_csv(path.string());
  }
  throw ConfigError("config: '" + key + "' names an unknown function '" + kind +
                    "' (constant, exp_min, sine_bump, linear, step, table)");
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"mode", "seed", "t0"}},
      {"grid", {"lower", "upper", "spacing"}},
      {"region", {"predicate", "lower", "upper"}},
      {"chain", {"drift", "vol", "h", "jump_rate", "jump_lower", "jump_upper", "dump"}},
      {"payoff", {"alpha", "f", "G", "H", "boundary", "horizon"}},
      {"solver", {"beta_schedule", "tol", "max_iters", "target_error"}},
      {"policy", {"starts", "epsilon", "n_paths", "max_steps", "eta", "slack"}},
      {"oracle", {"enabled", "slack", "steps"}},
      {"benchmark", {"alpha", "lower", "spacing", "samples", "slack", "max_layer_width"}},
  };
  return s;
}

// Function-valued keys accept "name.param" companions.
bool function_key(const std::string& section, const std::string& key) {
  static const std::set<std::pair<std::string, std::string>> fns = {
      {"chain", "drift"}, {"chain", "vol"}, {"payoff", "f"}, {"payoff", "G"}, {"payoff", "H"}};
  const auto dot = key.find('.');
  return dot != std::string::npos && fns.count({section, key.substr(0, dot)}) > 0;
}

void check_schema(const ConfigSource& src) {
  pt::ptree tree;
  std::istringstream in(src.canonical());
  pt::read_ini(in, tree);
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("config: unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("config: key '" + section + "' lies outside any section");
    for (const auto& [key, value] : body) {
      if (it->second.count(key) == 0 && !function_key(section, key)) {
        throw ConfigError("config: unknown key '" + section + "/" + key + "'");
      }
    }
  }
}

BoundaryConvention parse_boundary(const std::string& s) {
  if (s == "G") return BoundaryConvention::UseG;
  if (s == "H") return BoundaryConvention::UseH;
  if (s == "max") return BoundaryConvention::UseMax;
  throw ConfigError("config: 'payoff/boundary' must be G, H or max (got '" + s + "')");
}

}  // namespace

RunConfig RunConfig::from_source(const ConfigSource& source) {
  check_schema(source);
  const Reader r(source);
  RunConfig c;
  c.config_hash = source.hash();
  c.mode = parse_run_mode(r.text("run/mode", "exit"));
  c.seed = r.count("run/seed", 0);
  c.t0 = r.number("run/t0", 0.0);
  if (c.t0 < 0.0) throw ConfigError("config: 'run/t0' must be >= 0");

  c.solver.tol = r.number("solver/tol", 1e-10);
  c.solver.max_iters = r.count("solver/max_iters", 1'000'000);
  c.solver.target_error = r.number("solver/target_error", 0.0);
  if (r.has("solver/beta_schedule")) c.solver.beta_schedule = r.list("solver/beta_schedule");
  c.solver.validate();

  c.policy.epsilon = r.number("policy/epsilon", 0.0);
  c.policy.n_paths = r.count("policy/n_paths", 10'000);
  c.policy.max_steps = r.count("policy/max_steps", 1'000'000);
  c.policy.eta = r.number("policy/eta", 0.0);
  c.policy.slack = r.number("policy/slack", 0.0);
  if (r.has("policy/starts")) c.policy.starts = r.list("policy/starts");
  if (c.policy.epsilon < 0.0) throw ConfigError("config: 'policy/epsilon' must be >= 0");
  if (!c.policy.starts.empty() && c.policy.n_paths < 100) throw ConfigError("config: 'policy/n_paths' must be >= 100");
  if (c.policy.eta < 0.0) throw ConfigError("config: 'policy/eta' must be >= 0");

  c.oracle.enabled = r.flag("oracle/enabled", false);
  c.oracle.slack = r.number("oracle/slack", 1e-8);
  c.oracle.steps = r.count("oracle/steps", 0);
  if (!(c.oracle.slack > 0.0)) throw ConfigError("config: 'oracle/slack' must be positive");

  if (c.mode == RunMode::Benchmark) {
    for (const char* section : {"grid", "region", "chain", "payoff"}) {
      if (source.has_section(section)) {
        throw ConfigError(std::string("config: benchmark mode builds its own instance from [benchmark]; remove [") +
                          section + "]");
      }
    }
    auto& b = c.benchmark;
    b.alpha = r.number("benchmark/alpha", 0.25);
    b.lower = r.number("benchmark/lower", -8.0);
    b.spacing = r.number("benchmark/spacing", 0.02);
    b.samples = r.has("benchmark/samples") ? r.list("benchmark/samples") : std::vector<double>{};
    b.slack = r.number("benchmark/slack", b.spacing);
    b.max_layer_width = r.number("benchmark/max_layer_width", 0.1);
    if (!(b.alpha > 0.0 && b.alpha < 0.5)) throw ConfigError("config: 'benchmark/alpha' must lie in (0, 1/2)");
    if (!(b.spacing > 0.0)) throw ConfigError("config: 'benchmark/spacing' must be positive");
    if (!(b.lower < 1.0 - 2.0 * b.spacing)) throw ConfigError("config: 'benchmark/lower' must lie below 1");
    return c;
  }

  c.lower = r.number("grid/lower");
  c.upper = r.number("grid/upper");
  c.spacing = r.number("grid/spacing");
  if (!(c.spacing > 0.0)) throw ConfigError("config: 'grid/spacing' must be positive");
  if (!(c.upper > c.lower + c.spacing)) throw ConfigError("config: 'grid/upper' must exceed grid/lower by a spacing");

  c.region.predicate = r.text("region/predicate", "all");
  const auto& pred = c.region.predicate;
  if (pred == "below") {
    c.region.upper = r.number("region/upper");
  } else if (pred == "above") {
    c.region.lower = r.number("region/lower");
  } else if (pred == "interval") {
    c.region.lower = r.number("region/lower");
    c.region.upper = r.number("region/upper");
    if (!(c.region.upper > c.region.lower)) throw ConfigError("config: 'region/upper' must exceed region/lower");
  } else if (pred != "all") {
    throw ConfigError("config: 'region/predicate' must be below, above, interval or all (got '" + pred + "')");
  }

  c.chain.drift = r.has("chain/drift") ? make_function(r, "chain", "drift") : builtin::constant(0.0);
  c.chain.vol = make_function(r, "chain", "vol");
  c.chain.h = r.number("chain/h", 0.0);
  c.chain.jump_rate = r.number("chain/jump_rate", 0.0);
  c.chain.dump_kernel = r.flag("chain/dump", false);
  if (c.chain.h < 0.0) throw ConfigError("config: 'chain/h' must be positive (or 0 for the CFL limit)");
  if (c.chain.jump_rate < 0.0) throw ConfigError("config: 'chain/jump_rate' must be >= 0");
  if (c.chain.jump_rate > 0.0) {
    c.chain.jump_lower = r.number("chain/jump_lower");
    c.chain.jump_upper = r.number("chain/jump_upper");
  }

  static const std::map<RunMode, Mode> modes = {{RunMode::Exit, Mode::ExitConstrained},
                                                {RunMode::General, Mode::GeneralF},
                                                {RunMode::Infinite, Mode::InfiniteHorizon},
                                                {RunMode::Finite, Mode::FiniteHorizon}};
  auto& p = c.payoff;
  p.mode = modes.at(c.mode);
  p.alpha = r.number("payoff/alpha");
  p.running = r.has("payoff/f") ? make_function(r, "payoff", "f") : builtin::constant(0.0);
  p.stop = make_function(r, "payoff", "G");
  const bool needs_h = p.mode == Mode::ExitConstrained || p.mode == Mode::GeneralF;
  p.exit = (needs_h || r.has("payoff/H")) ? make_function(r, "payoff", "H") : builtin::constant(0.0);
  p.boundary = parse_boundary(r.text("payoff/boundary", "max"));
  if (p.mode == Mode::FiniteHorizon) p.horizon = r.number("payoff/horizon");
  p.validate();
  return c;
}

}  // namespace penstop
