#ifndef DMPCRL_H
#define DMPCRL_H

/* C interface to the distributed-MPC reinforcement-learning simulator.
 * A run handle wraps one validated configuration; the command functions
 * write their CSV/SVG artifacts into the given output directory.
 *
 * All functions returning int use the DMPCRL_* status codes; on failure
 * dmpcrl_last_error() yields a human-readable message owned by the handle
 * (valid until the next call on that handle, or until destruction).
 */

#ifdef __cplusplus
extern "C" {
#endif

#define DMPCRL_OK 0
#define DMPCRL_ERR_RUNTIME 1 /* solver/numeric/I-O failure */
#define DMPCRL_ERR_CONFIG 2  /* unreadable or invalid configuration */
#define DMPCRL_ERR_ARG 3     /* null handle or bad argument */

typedef struct dmpcrl_run dmpcrl_run;

/* Parses and validates the JSON configuration file. Always allocates a
 * handle (write it to *out) unless out is null; on a nonzero return the
 * handle only supports dmpcrl_last_error and dmpcrl_run_destroy. */
int dmpcrl_run_create(const char* config_path, dmpcrl_run** out);
void dmpcrl_run_destroy(dmpcrl_run* run);

/* Overrides applied on top of the configuration file. Seed covers both
 * the environment noise and the learner randomness so artifacts are
 * reproducible per (config, seed). Threads caps worker parallelism (the
 * reference implementation is sequential; values >= 1 are accepted). */
int dmpcrl_run_set_seed(dmpcrl_run* run, unsigned seed);
int dmpcrl_run_set_threads(dmpcrl_run* run, int threads);
int dmpcrl_run_set_plots(dmpcrl_run* run, int enabled);

/* Commands. out_dir is created if missing. */
int dmpcrl_run_train(dmpcrl_run* run, const char* out_dir);
int dmpcrl_run_dual_check(dmpcrl_run* run, const char* out_dir);
int dmpcrl_run_compare(dmpcrl_run* run, const char* out_dir);

const char* dmpcrl_last_error(const dmpcrl_run* run);
const char* dmpcrl_version(void);

#ifdef __cplusplus
}
#endif

#endif /* DMPCRL_H */
