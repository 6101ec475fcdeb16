#include "penstop/penstop.h"

#include <cstring>
#include <exception>
#include <sstream>
#include <string>

#include "penstop/config.hpp"
#include "penstop/error.hpp"
#include "penstop/parallel.hpp"
#include "penstop/reference.hpp"
#include "penstop/run.hpp"

struct penstop_config {
  penstop::ConfigSource source;
};

struct penstop_result {
  penstop::RunOutcome outcome;
};

namespace {

thread_local std::string g_last_error;

penstop_status fail(penstop_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the library's exception hierarchy onto status codes.
template <class F>
penstop_status guarded(F&& body) {
  try {
    body();
    return PENSTOP_OK;
  } catch (const penstop::ConfigError& e) {
    return fail(PENSTOP_ERR_CONFIG, e.what());
  } catch (const penstop::NumericalError& e) {
    return fail(PENSTOP_ERR_NUMERICAL, e.what());
  } catch (const penstop::IoError& e) {
    return fail(PENSTOP_ERR_IO, e.what());
  } catch (const penstop::SizeGuardError& e) {
    return fail(PENSTOP_ERR_ARGUMENT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PENSTOP_ERR_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(PENSTOP_ERR_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PENSTOP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PENSTOP_ERR_INTERNAL, "unknown error");
  }
}

penstop_status null_argument(const char* what) { return fail(PENSTOP_ERR_ARGUMENT, std::string(what) + " is NULL"); }

}  // namespace

extern "C" {

const char* penstop_version(void) { return penstop::version(); }

const char* penstop_last_error(void) { return g_last_error.c_str(); }

penstop_status penstop_config_load(const char* path, penstop_config** out) {
  if (path == nullptr || out == nullptr) return null_argument("path or out");
  *out = nullptr;
  return guarded([&] { *out = new penstop_config{penstop::ConfigSource::load(path)}; });
}

penstop_status penstop_config_parse(const char* text, const char* base_dir, penstop_config** out) {
  if (text == nullptr || out == nullptr) return null_argument("text or out");
  *out = nullptr;
  return guarded([&] {
    *out = new penstop_config{penstop::ConfigSource::parse(text, base_dir != nullptr ? base_dir : "")};
  });
}

penstop_status penstop_config_set(penstop_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) return null_argument("config, key or value");
  return guarded([&] { config->source.set(key, value); });
}

penstop_status penstop_config_get(const penstop_config* config, const char* key, char* buf, size_t size) {
  if (config == nullptr || key == nullptr || buf == nullptr || size == 0) return null_argument("config, key or buf");
  std::optional<std::string> value;
  const penstop_status st = guarded([&] { value = config->source.get(key); });
  if (st != PENSTOP_OK) return st;
  if (!value) return fail(PENSTOP_ERR_ARGUMENT, std::string("key '") + key + "' is not set");
  const std::size_t n = std::min(size - 1, value->size());
  std::memcpy(buf, value->data(), n);
  buf[n] = '\0';
  return PENSTOP_OK;
}

penstop_status penstop_config_validate(const penstop_config* config) {
  if (config == nullptr) return null_argument("config");
  return guarded([&] { (void)penstop::RunConfig::from_source(config->source); });
}

void penstop_config_free(penstop_config* config) { delete config; }

penstop_status penstop_run(const penstop_config* config, const char* output_dir, penstop_result** out) {
  if (config == nullptr || out == nullptr) return null_argument("config or out");
  *out = nullptr;
  return guarded([&] {
    auto outcome = penstop::execute_run(config->source, output_dir != nullptr ? output_dir : "");
    *out = new penstop_result{std::move(outcome)};
  });
}

int penstop_result_passed(const penstop_result* result) { return result != nullptr && result->outcome.passed(); }

size_t penstop_result_state_count(const penstop_result* result) {
  return result == nullptr ? 0 : result->outcome.states.size();
}

size_t penstop_result_beta_count(const penstop_result* result) {
  return result == nullptr ? 0 : result->outcome.fields.size();
}

penstop_status penstop_result_beta(const penstop_result* result, size_t index, double* beta) {
  if (result == nullptr || beta == nullptr) return null_argument("result or beta");
  if (index >= result->outcome.fields.size()) return fail(PENSTOP_ERR_ARGUMENT, "beta index out of range");
  *beta = result->outcome.fields[index].beta;
  return PENSTOP_OK;
}

penstop_status penstop_result_state(const penstop_result* result, size_t state, double* x) {
  if (result == nullptr || x == nullptr) return null_argument("result or x");
  if (state >= result->outcome.states.size()) return fail(PENSTOP_ERR_ARGUMENT, "state index out of range");
  *x = result->outcome.states[state];
  return PENSTOP_OK;
}

penstop_status penstop_result_value(const penstop_result* result, size_t beta_index, size_t state, double* value) {
  if (result == nullptr || value == nullptr) return null_argument("result or value");
  const auto& fields = result->outcome.fields;
  if (beta_index >= fields.size()) return fail(PENSTOP_ERR_ARGUMENT, "beta index out of range");
  if (state >= fields[beta_index].states) return fail(PENSTOP_ERR_ARGUMENT, "state index out of range");
  *value = fields[beta_index].at(0, state);
  return PENSTOP_OK;
}

penstop_status penstop_result_error_bound(const penstop_result* result, size_t beta_index, double* bound) {
  if (result == nullptr || bound == nullptr) return null_argument("result or bound");
  if (beta_index >= result->outcome.fields.size()) return fail(PENSTOP_ERR_ARGUMENT, "beta index out of range");
  *bound = result->outcome.fields[beta_index].error_bound;
  return PENSTOP_OK;
}

const char* penstop_result_summary(const penstop_result* result) {
  return result == nullptr ? "" : result->outcome.summary_json.c_str();
}

void penstop_result_free(penstop_result* result) { delete result; }

penstop_status penstop_compare(const char* dir_a, const char* dir_b, const char* report_path, double* sup_diff,
                               char** summary_out) {
  if (dir_a == nullptr || dir_b == nullptr) return null_argument("dir_a or dir_b");
  if (summary_out != nullptr) *summary_out = nullptr;
  return guarded([&] {
    const auto report = penstop::compare_runs(dir_a, dir_b, report_path != nullptr ? report_path : "");
    if (sup_diff != nullptr) *sup_diff = report.sup_diff;
    if (summary_out != nullptr) {
      std::ostringstream os;
      report.write_text(os);
      const std::string text = os.str();
      char* copy = new char[text.size() + 1];
      std::memcpy(copy, text.c_str(), text.size() + 1);
      *summary_out = copy;
    }
  });
}

void penstop_string_free(char* text) { delete[] text; }

void penstop_set_max_threads(size_t threads) { penstop::set_max_threads(threads); }

penstop_status penstop_closed_form_l(double t, double x, double alpha, double* value) {
  if (value == nullptr) return null_argument("value");
  return guarded([&] { *value = penstop::closed_form_l(t, x, alpha); });
}

}  // extern "C"
