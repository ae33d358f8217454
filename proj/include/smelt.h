/* smelt — iterative artifact refinement engine, C API.
 *
 * All functions return smelt_status; on failure smelt_last_error() holds a
 * thread-local message. Strings returned through out-parameters are owned
 * by the caller and must be released with smelt_string_free().
 */

#ifndef SMELT_H
#define SMELT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smelt_status {
  SMELT_OK = 0,
  SMELT_ERR_INVALID_ARGUMENT = 1,
  SMELT_ERR_CONFIG = 2,
  SMELT_ERR_IO = 3,
  SMELT_ERR_NOT_FOUND = 4,
  SMELT_ERR_ABORTED = 5,
  SMELT_ERR_INTERNAL = 6
} smelt_status;

const char* smelt_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* smelt_last_error(void);

void smelt_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

/* Validates a config file without running. `diagnostics_out` (optional)
 * receives a newline-separated list of field-level problems; empty when the
 * config is valid. Returns SMELT_ERR_CONFIG when problems were found. */
smelt_status smelt_config_validate(const char* config_path,
                                   char** diagnostics_out);

/* ---- runs -------------------------------------------------------------- */

typedef struct smelt_run smelt_run; /* opaque */

/* Per-iteration progress: t, best composite error so far, evaluated pool
 * size, and the fraction of clause outcomes served from cache. */
typedef void (*smelt_progress_fn)(void* user, int iteration, double best_delta,
                                  int pool_size, double cache_hit_rate);

/* Prepares a new run: loads the config, reads the artifact directory and
 * creates the run directory. `seed_override` < 0 keeps the config seed. */
smelt_status smelt_run_new(const char* config_path, const char* artifact_dir,
                           const char* run_dir, int64_t seed_override,
                           smelt_run** out);

/* Prepares continuation of an interrupted run directory. */
smelt_status smelt_run_resume(const char* run_dir, smelt_run** out);

/* Executes until termination. Safe to call once per handle. */
smelt_status smelt_run_execute(smelt_run* run, smelt_progress_fn progress,
                               void* user);

/* JSON summary of a finished run (reason, final candidate, delta, mu,
 * iterations). */
smelt_status smelt_run_result_json(smelt_run* run, char** json_out);

void smelt_run_free(smelt_run* run);

/* ---- synthetic benchmarks ---------------------------------------------- */

/* Runs `replicates` seeded convergence experiments on a shipped fixture id
 * (S1, S2, S3) or a fixture JSON file, writes the report CSV to `out_path`
 * and returns a JSON summary (success_rate, median_iterations). */
smelt_status smelt_bench(const char* fixture, int replicates,
                         const char* out_path, int64_t base_seed,
                         char** summary_json_out);

/* ---- inspection --------------------------------------------------------- */

/* Renders one aspect ("distribution", "history", "feedback") of a stored
 * run at iteration `t` as plain text. */
smelt_status smelt_inspect(const char* run_dir, const char* what, int t,
                           char** text_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SMELT_H */
