/* Public C interface to the selective-inference core.
 *
 * All functions return a status code; SELINF_OK means the out-parameters are
 * valid. On failure, selinf_last_error() describes the problem for the
 * calling thread. Results are opaque handles owning their serialized output;
 * release them with selinf_result_free().
 */
#ifndef SELINF_H
#define SELINF_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SELINF_OK 0
#define SELINF_ERR_INVALID 1         /* bad arguments or malformed input */
#define SELINF_ERR_EMPTY_SELECTION 2 /* the query selected nothing */
#define SELINF_ERR_SOLVER 3          /* an iterative solver failed */
#define SELINF_ERR_NUMERIC 4         /* conditioning/factorization failure */
#define SELINF_ERR_INTERNAL 5

typedef struct selinf_result selinf_result;

typedef struct selinf_infer_options {
  const char* query;  /* "lasso" | "screening" | "slope" | "lasso2" | "ms-slope" */
  const char* lambda; /* "theory" | "cv.min" | "cv.1se" | numeric literal */
  double rand_ratio;  /* randomization variance over noise variance */
  double level;       /* nominal interval coverage, e.g. 0.90 */
  const char* target; /* "partial" | "full" */
  uint64_t seed;
  int standardize; /* recorded in the manifest; the caller owns the transform */
  double sigma2;   /* <= 0 requests the OLS residual estimate (needs n > p) */
  double ms_alpha; /* marginal screening level */
  double slope_lam_scale;
} selinf_infer_options;

/* Fills an options struct with the documented defaults. */
void selinf_infer_options_init(selinf_infer_options* opts);

/* Maximum-likelihood selective inference on a dense column-major n x p design
 * and length-n response. names may be NULL (columns are then labeled x0..).
 */
int selinf_infer(const double* x, int64_t n, int64_t p, const double* y,
                 const char* const* names, const selinf_infer_options* opts,
                 selinf_result** out);

/* Simulation harness; config is a JSON object (see the README for keys).
 * The result carries a JSON summary and a long-format CSV. */
int selinf_simulate(const char* config_json, selinf_result** out);

/* ECDF of conditioned pivots for the univariate threshold problem plus a
 * Kolmogorov-Smirnov uniformity check. */
int selinf_pivot_check(double beta, double tau, double eta2, int draws, uint64_t seed,
                       selinf_result** out);

/* Serialized views owned by the handle; valid until selinf_result_free. */
const char* selinf_result_json(const selinf_result* result);
const char* selinf_result_csv(const selinf_result* result); /* NULL when absent */

void selinf_result_free(selinf_result* result);

/* Thread-local message for the most recent failure. */
const char* selinf_last_error(void);

const char* selinf_version(void);

#ifdef __cplusplus
}
#endif

#endif /* SELINF_H */
