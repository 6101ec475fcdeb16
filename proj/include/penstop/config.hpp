#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "penstop/chain.hpp"
#include "penstop/lattice.hpp"
#include "penstop/payoff.hpp"
#include "penstop/penalty.hpp"

namespace penstop {

/// Raw key = value configuration, sections addressed as "section/key".
/// Keeps the text form so runs can be hashed and overridden.
class ConfigSource {
 public:
  /// Parses INI text; `base_dir` resolves relative table paths.
  static ConfigSource parse(const std::string& text, std::filesystem::path base_dir = {});
  static ConfigSource load(const std::filesystem::path& path);

  ConfigSource(const ConfigSource&);
  ConfigSource& operator=(const ConfigSource&);
  ConfigSource(ConfigSource&&) noexcept;
  ConfigSource& operator=(ConfigSource&&) noexcept;
  ~ConfigSource();

  /// Sets or replaces "section/key".
  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  bool has_section(const std::string& section) const;
  const std::filesystem::path& base_dir() const noexcept;
  /// Canonical INI text of the current contents.
  std::string canonical() const;
  /// FNV-1a of the canonical text, as 16 hex digits.
  std::string hash() const;

 private:
  struct Impl;
  explicit ConfigSource(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

enum class RunMode { Exit, General, Infinite, Finite, Benchmark };

const char* to_string(RunMode mode) noexcept;
RunMode parse_run_mode(const std::string& text);

struct ChainConfig {
  PayoffFunction drift;
  PayoffFunction vol;
  /// Time step; 0 selects the largest step allowed by the CFL condition.
  double h = 0.0;
  double jump_rate = 0.0;
  double jump_lower = 0.0;
  double jump_upper = 0.0;
  bool dump_kernel = false;
};

struct RegionConfig {
  std::string predicate = "below";
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct PolicyConfig {
  std::vector<double> starts;
  double epsilon = 0.0;
  std::size_t n_paths = 10'000;
  std::size_t max_steps = 1'000'000;
  /// Exit-tail horizon; 0 disables the diagnostic.
  double eta = 0.0;
  /// Allowance added to the epsilon-optimality assertion.
  double slack = 0.0;
};

struct OracleConfig {
  bool enabled = false;
  double slack = 1e-8;
  /// 0 derives the step count from `slack`.
  std::size_t steps = 0;
};

struct BenchmarkConfig {
  double alpha = 0.25;
  double lower = -8.0;
  double spacing = 0.02;
  std::vector<double> samples;
  /// Allowed sup_l - w_beta at the samples.
  double slack = 0.0;
  /// Largest Interior stopping layer (state units) accepted next to the boundary.
  double max_layer_width = 0.0;
};

/// Validated run description built from a ConfigSource.
struct RunConfig {
  RunMode mode = RunMode::Exit;
  std::uint64_t seed = 0;
  double t0 = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  double spacing = 0.1;
  RegionConfig region;
  ChainConfig chain;
  PayoffSpec payoff;
  PenaltyConfig solver;
  PolicyConfig policy;
  OracleConfig oracle;
  BenchmarkConfig benchmark;
  std::string config_hash;

  /// Throws ConfigError naming the offending "section/key".
  static RunConfig from_source(const ConfigSource& source);
};

}  // namespace penstop
