/*
 * C interface to the penstop optimal-stopping solver.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a penstop_status;
 * on failure penstop_last_error() describes the problem for the calling
 * thread until its next failing call.
 */
#ifndef PENSTOP_PENSTOP_H
#define PENSTOP_PENSTOP_H

#include <stddef.h>

#if defined(PENSTOP_BUILDING_LIBRARY)
#define PENSTOP_API __attribute__((visibility("default")))
#else
#define PENSTOP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum penstop_status {
  PENSTOP_OK = 0,
  PENSTOP_ERR_IO = 1,
  PENSTOP_ERR_CONFIG = 2,
  PENSTOP_ERR_NUMERICAL = 3,
  PENSTOP_ERR_ARGUMENT = 4,
  PENSTOP_ERR_INTERNAL = 5
} penstop_status;

typedef struct penstop_config penstop_config;
typedef struct penstop_result penstop_result;

PENSTOP_API const char* penstop_version(void);
/* Message of the last failure on this thread ("" if none). */
PENSTOP_API const char* penstop_last_error(void);

/* Configuration: INI text with sections; keys are addressed "section/key". */
PENSTOP_API penstop_status penstop_config_load(const char* path, penstop_config** out);
PENSTOP_API penstop_status penstop_config_parse(const char* text, const char* base_dir, penstop_config** out);
PENSTOP_API penstop_status penstop_config_set(penstop_config* config, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated, truncated to size). Returns
 * PENSTOP_ERR_ARGUMENT when the key is absent. */
PENSTOP_API penstop_status penstop_config_get(const penstop_config* config, const char* key, char* buf, size_t size);
/* Validates the configuration without running it. */
PENSTOP_API penstop_status penstop_config_validate(const penstop_config* config);
PENSTOP_API void penstop_config_free(penstop_config* config);

/* Runs the configured solve and checks. output_dir may be NULL or "" to
 * skip writing artifacts. Failed assertions still return PENSTOP_OK; query
 * penstop_result_passed. */
PENSTOP_API penstop_status penstop_run(const penstop_config* config, const char* output_dir, penstop_result** out);
PENSTOP_API int penstop_result_passed(const penstop_result* result);
PENSTOP_API size_t penstop_result_state_count(const penstop_result* result);
PENSTOP_API size_t penstop_result_beta_count(const penstop_result* result);
PENSTOP_API penstop_status penstop_result_beta(const penstop_result* result, size_t index, double* beta);
PENSTOP_API penstop_status penstop_result_state(const penstop_result* result, size_t state, double* x);
/* Value at (beta index, state) on the first time slice. */
PENSTOP_API penstop_status penstop_result_value(const penstop_result* result, size_t beta_index, size_t state,
                                                double* value);
PENSTOP_API penstop_status penstop_result_error_bound(const penstop_result* result, size_t beta_index, double* bound);
/* JSON summary of the run; owned by the result. */
PENSTOP_API const char* penstop_result_summary(const penstop_result* result);
PENSTOP_API void penstop_result_free(penstop_result* result);

/* Compares the value files of two run directories. report_path may be NULL;
 * when given, per-point differences are written there as CSV. The text
 * summary is written to summary_out if non-NULL (caller frees with
 * penstop_string_free). */
PENSTOP_API penstop_status penstop_compare(const char* dir_a, const char* dir_b, const char* report_path,
                                           double* sup_diff, char** summary_out);
PENSTOP_API void penstop_string_free(char* text);

/* Caps worker threads for this process; 0 restores the default
 * (hardware concurrency limited by PENALTY_STOP_THREADS). */
PENSTOP_API void penstop_set_max_threads(size_t threads);

/* l(t, x) of the Brownian example for discount alpha. */
PENSTOP_API penstop_status penstop_closed_form_l(double t, double x, double alpha, double* value);

#ifdef __cplusplus
}
#endif

#endif /* PENSTOP_PENSTOP_H */
