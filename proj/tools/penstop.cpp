// Command-line front end: `penstop run` and `penstop compare`.
//
// Exit codes: 0 success, 1 I/O failure, 2 configuration error,
// 3 numerical failure or a failed assertion.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "penstop/penstop.h"

namespace {

int exit_code(penstop_status status) {
  switch (status) {
    case PENSTOP_OK: return 0;
    case PENSTOP_ERR_IO: return 1;
    case PENSTOP_ERR_CONFIG:
    case PENSTOP_ERR_ARGUMENT: return 2;
    case PENSTOP_ERR_NUMERICAL:
    case PENSTOP_ERR_INTERNAL: return 3;
  }
  return 3;
}

int report_failure(penstop_status status, const char* stage) {
  std::cerr << "penstop " << stage << ": " << penstop_last_error() << '\n';
  return exit_code(status);
}

struct RunArgs {
  std::string config;
  std::string output_dir = "penstop-out";
  std::string mode;
  std::string beta_list;
  long long seed = -1;
};

int do_run(const RunArgs& args) {
  penstop_config* cfg = nullptr;
  penstop_status st = penstop_config_load(args.config.c_str(), &cfg);
  if (st != PENSTOP_OK) return report_failure(st, "config");
  auto set = [&](const char* key, const std::string& value) {
    return st == PENSTOP_OK ? (st = penstop_config_set(cfg, key, value.c_str())) : st;
  };
  if (args.seed >= 0) set("run/seed", std::to_string(args.seed));
  if (!args.mode.empty()) set("run/mode", args.mode);
  if (!args.beta_list.empty()) set("solver/beta_schedule", args.beta_list);
  if (st != PENSTOP_OK) {
    penstop_config_free(cfg);
    return report_failure(st, "config");
  }

  penstop_result* result = nullptr;
  st = penstop_run(cfg, args.output_dir.c_str(), &result);
  penstop_config_free(cfg);
  if (st != PENSTOP_OK) return report_failure(st, "run");

  const auto summary = nlohmann::json::parse(penstop_result_summary(result));
  std::printf("mode %s, %zu states, config %s\n", summary["mode"].get<std::string>().c_str(),
              penstop_result_state_count(result), summary["config_hash"].get<std::string>().c_str());
  for (const auto& b : summary["betas"]) {
    std::printf("  beta %-8g iters %-8llu residual %.3e  error bound %.6g\n", b["beta"].get<double>(),
                b["iters"].get<unsigned long long>(), b["residual"].get<double>(), b["error_bound"].get<double>());
  }
  for (const auto& w : summary["warnings"]) std::printf("  warning: %s\n", w.get<std::string>().c_str());
  for (const auto& a : summary["assertions"]) {
    std::printf("  %s %s: %s\n", a["passed"].get<bool>() ? "ok  " : "FAIL", a["name"].get<std::string>().c_str(),
                a["detail"].get<std::string>().c_str());
  }
  std::printf("artifacts in %s\n", args.output_dir.c_str());
  const bool passed = penstop_result_passed(result) != 0;
  penstop_result_free(result);
  return passed ? 0 : 3;
}

int do_compare(const std::string& a, const std::string& b, const std::string& output) {
  double sup = 0.0;
  char* text = nullptr;
  const penstop_status st = penstop_compare(a.c_str(), b.c_str(), output.empty() ? nullptr : output.c_str(), &sup, &text);
  if (st != PENSTOP_OK) return report_failure(st, "compare");
  std::fputs(text, stdout);
  penstop_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalty-method optimal stopping solver"};
  app.set_version_flag("--version", std::string(penstop_version()));
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Solve a configured problem and write its artifacts");
  run->add_option("--config", run_args.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", run_args.output_dir, "Directory for artifacts")->capture_default_str();
  run->add_option("--seed", run_args.seed, "Override run/seed")->check(CLI::NonNegativeNumber);
  run->add_option("--mode", run_args.mode, "Override run/mode")
      ->check(CLI::IsMember({"exit", "general", "infinite", "finite", "benchmark"}));
  run->add_option("--beta-list", run_args.beta_list, "Override the beta schedule, e.g. \"1,2,4\"");

  std::string dir_a, dir_b, output;
  auto* cmp = app.add_subcommand("compare", "Compare value fields of two run directories");
  cmp->add_option("run_a", dir_a, "First run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("run_b", dir_b, "Second run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--output", output, "Write per-point differences to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (run->parsed()) return do_run(run_args);
  return do_compare(dir_a, dir_b, output);
}
