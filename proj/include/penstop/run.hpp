#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "penstop/config.hpp"
#include "penstop/penalty.hpp"

namespace penstop {

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunOutcome {
  std::string config_hash;
  std::vector<double> states;
  std::vector<ValueField> fields;
  std::vector<Assertion> assertions;
  std::vector<std::string> warnings;
  std::string summary_json;

  bool passed() const;
};

/// Builds the instance described by `source`, runs the beta sweep and the
/// enabled oracle, policy and benchmark checks, and writes all artifacts to
/// `output_dir` (nothing is written when it is empty). Configuration
/// problems throw ConfigError, solver failures NumericalError; failed
/// assertions are reported in the outcome instead.
RunOutcome execute_run(const ConfigSource& source, const std::filesystem::path& output_dir);

struct FieldDiff {
  std::string file;
  std::size_t common_points = 0;
  double sup_diff = 0.0;
  std::size_t argmax_slice = 0;
  double argmax_x = 0.0;
};

struct CompareReport {
  std::vector<FieldDiff> files;
  std::vector<std::string> only_in_a;
  std::vector<std::string> only_in_b;
  double sup_diff = 0.0;

  /// One summary line per compared file.
  void write_text(std::ostream& os) const;
};

/// Compares the value files (value_beta_*.csv, oracle_snell.csv) present in
/// both run directories on the lattice points they share. Runs on nested
/// grids compare on the coarse points. Throws ConfigError when a file pair
/// has different slice counts or no common point, or when no file is shared.
/// With a non-empty `details` path, writes per-point differences as CSV.
CompareReport compare_runs(const std::filesystem::path& a, const std::filesystem::path& b,
                           const std::filesystem::path& details = {});

/// Version string of the library.
const char* version() noexcept;

}  // namespace penstop
