/* C interface to the thermal-aware allocation simulator.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every call returns a releta_status; on failure
 * releta_last_error() describes the problem for the calling thread. Status
 * values equal the exit codes of the releta-sim command-line tool.
 */
#ifndef RELETA_RELETA_H
#define RELETA_RELETA_H

#include <stddef.h>
#include <stdint.h>

#if defined(RELETA_BUILDING_LIBRARY)
#define RELETA_API __attribute__((visibility("default")))
#else
#define RELETA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum releta_status {
  RELETA_OK = 0,
  RELETA_ERR_RUNTIME = 1,    /* I/O failure, diverged training, mismatched comparison */
  RELETA_ERR_USAGE = 2,      /* null handle, bad index or argument */
  RELETA_ERR_PARSE = 3,      /* malformed configuration text */
  RELETA_ERR_VALIDATION = 4  /* configuration violates an invariant */
} releta_status;

typedef struct releta_config releta_config;
typedef struct releta_result releta_result;
typedef struct releta_comparison releta_comparison;

RELETA_API const char* releta_version(void);

/* Message for the last failed call on this thread; "" if none. */
RELETA_API const char* releta_last_error(void);

/* --- configuration ----------------------------------------------------- */

RELETA_API releta_status releta_config_load(const char* path, releta_config** out);
RELETA_API releta_status releta_config_parse(const char* text, const char* base_dir, releta_config** out);
RELETA_API releta_status releta_config_default(releta_config** out);
RELETA_API releta_status releta_config_clone(const releta_config* cfg, releta_config** out);
RELETA_API void releta_config_free(releta_config* cfg);

RELETA_API releta_status releta_config_set_seed(releta_config* cfg, uint64_t seed);
RELETA_API releta_status releta_config_seed(const releta_config* cfg, uint64_t* out);
/* Enables per-decision wall-clock timing in run results (off by default so
 * output files are reproducible). */
RELETA_API releta_status releta_config_set_timing(releta_config* cfg, int enabled);
/* Returned strings stay valid until the handle is freed or modified. */
RELETA_API releta_status releta_config_name(const releta_config* cfg, const char** out);
RELETA_API releta_status releta_config_agent(const releta_config* cfg, const char** out);
RELETA_API releta_status releta_config_describe(const releta_config* cfg, const char** out);
RELETA_API releta_status releta_config_releases(const releta_config* cfg, size_t* out);

/* Number of grid points in the config's [sweep] section (1 without one). */
RELETA_API releta_status releta_config_sweep_size(const releta_config* cfg, size_t* out);
/* Grid point `index` as a standalone config; its name carries the overrides. */
RELETA_API releta_status releta_config_sweep_point(const releta_config* cfg, size_t index, releta_config** out);

/* --- episodes ----------------------------------------------------------- */

RELETA_API releta_status releta_run(const releta_config* cfg, releta_result** out);
RELETA_API void releta_result_free(releta_result* result);

RELETA_API releta_status releta_result_releases(const releta_result* r, size_t* out);
RELETA_API releta_status releta_result_peak_temp(const releta_result* r, size_t release, double* out);
RELETA_API releta_status releta_result_mean_temp(const releta_result* r, size_t release, double* out);
RELETA_API releta_status releta_result_reward(const releta_result* r, size_t release, double* out);
RELETA_API releta_status releta_result_action(const releta_result* r, size_t release, size_t* out);
/* Sets *has_rate to 0 when no released task carries a latency constraint. */
RELETA_API releta_status releta_result_violation_rate(const releta_result* r, double* out, int* has_rate);
/* Mean peak temperature over releases [n/2, n). */
RELETA_API releta_status releta_result_converged_peak(const releta_result* r, double* out);
RELETA_API releta_status releta_result_write_csv(const releta_result* r, const char* path);
/* Fails with RELETA_ERR_USAGE for policies without a Q-network. */
RELETA_API releta_status releta_result_write_checkpoint(const releta_result* r, const char* path);

/* Runs `count` independent configs on up to `threads` workers; results[i]
 * receives the result for cfgs[i]. */
RELETA_API releta_status releta_run_many(const releta_config* const* cfgs, size_t count, unsigned threads,
                                         releta_result** results);

/* --- comparisons -------------------------------------------------------- */

/* Configs must share platform, arrivals and seed; the first is the reference. */
RELETA_API releta_status releta_compare(const releta_config* const* cfgs, size_t count, unsigned threads,
                                        releta_comparison** out);
RELETA_API void releta_comparison_free(releta_comparison* c);
RELETA_API releta_status releta_comparison_rows(const releta_comparison* c, size_t* out);
RELETA_API releta_status releta_comparison_row(const releta_comparison* c, size_t row, const char** name,
                                               double* mean_peak, double* avg_diff, double* max_diff);
/* Borrowed; valid while the comparison lives. */
RELETA_API releta_status releta_comparison_result(const releta_comparison* c, size_t row,
                                                  const releta_result** out);
RELETA_API releta_status releta_comparison_write_text(const releta_comparison* c, const char* path);
RELETA_API releta_status releta_comparison_write_csv(const releta_comparison* c, const char* path);
RELETA_API releta_status releta_comparison_text(const releta_comparison* c, const char** out);

/* --- timing ------------------------------------------------------------- */

/* Mean and max wall-clock microseconds of one decide + observe cycle. */
RELETA_API releta_status releta_overhead(const releta_config* cfg, size_t repetitions, double* mean_us,
                                         double* max_us);

#ifdef __cplusplus
}
#endif

#endif /* RELETA_RELETA_H */
