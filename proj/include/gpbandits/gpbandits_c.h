/* C API for the gpbandits library.
 *
 * All functions return gpb_status; on any non-GPB_OK return the thread-local
 * message from gpb_last_error() describes the failure. Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching *_free function. Status codes mirror the CLI exit codes.
 */

#ifndef GPBANDITS_GPBANDITS_C_H_
#define GPBANDITS_GPBANDITS_C_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpb_status {
  GPB_OK = 0,
  GPB_ERR_USAGE = 1,
  GPB_ERR_PARSE = 2,
  GPB_ERR_RUNTIME = 3
} gpb_status;

typedef struct gpb_config gpb_config;
typedef struct gpb_network gpb_network;
typedef struct gpb_result gpb_result;

const char* gpb_version(void);

/* Message for the most recent failure on this thread; empty if none. */
const char* gpb_last_error(void);

/* --- configuration ------------------------------------------------- */

gpb_status gpb_config_create(gpb_config** out);
gpb_status gpb_config_load(const char* path, gpb_config** out);
/* Overrides or adds one flat dotted key. */
gpb_status gpb_config_set(gpb_config* config, const char* key,
                          const char* value);
void gpb_config_free(gpb_config* config);

/* --- road networks -------------------------------------------------- */

/* Accepts a file path or the spec string "grid:<rows>x<cols>:<seed>". */
gpb_status gpb_network_load(const char* path_or_spec, gpb_network** out);
int gpb_network_edge_count(const gpb_network* network);
int gpb_network_connection_count(const gpb_network* network);
/* Structural validation report (also lists component-restriction drops). */
gpb_status gpb_network_validate(const gpb_network* network, gpb_result** out);
void gpb_network_free(gpb_network* network);

/* --- experiments ----------------------------------------------------- */

/* Runs the configured experiment, writes the trace CSV to csv_path (pass
 * NULL to skip) and returns the textual summary. */
gpb_status gpb_run_experiment(const gpb_config* config, const char* csv_path,
                              int jobs, gpb_result** out);

/* Regret-bound report from the configured constants. */
gpb_status gpb_bounds_report(const gpb_config* config, gpb_result** out);

/* Greedy information-gain report for the configured environment. */
gpb_status gpb_gamma_report(const gpb_config* config, gpb_result** out);

/* Discretization-size table for t = 1..T. */
gpb_status gpb_tau_table(const gpb_config* config, gpb_result** out);

/* Lengthscale sweep; one summary row per (lengthscale, algorithm). */
gpb_status gpb_sweep_lengthscale(const gpb_config* config, const char* csv_path,
                                 int jobs, gpb_result** out);

const char* gpb_result_text(const gpb_result* result);
void gpb_result_free(gpb_result* result);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GPBANDITS_GPBANDITS_C_H_ */
