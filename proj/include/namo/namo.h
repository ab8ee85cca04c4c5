#ifndef NAMO_NAMO_H
#define NAMO_NAMO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define NAMO_API __attribute__((visibility("default")))
#else
#define NAMO_API
#endif

typedef enum namo_status {
  NAMO_OK = 0,
  NAMO_ERR_DIMENSION = 1,
  NAMO_ERR_INPUT = 2,
  NAMO_ERR_NUMERICAL = 3,
  NAMO_ERR_CONFIG = 4,
  NAMO_ERR_IO = 5,
  NAMO_ERR_PRECONDITION = 6,
  NAMO_ERR_CHECK_FAILED = 7, /* a verification or acceptance check did not hold */
  NAMO_ERR_INTERNAL = 8
} namo_status;

/* Message for the most recent failing call on this thread; "" after success. */
NAMO_API const char* namo_last_error(void);
NAMO_API const char* namo_status_name(namo_status status);

/* ---- matrices ---------------------------------------------------------- */

typedef struct namo_matrix namo_matrix;

/* `data` is row-major with rows * cols entries; NULL gives a zero matrix. */
NAMO_API namo_status namo_matrix_create(size_t rows, size_t cols, const double* data,
                                        namo_matrix** out);
NAMO_API void namo_matrix_destroy(namo_matrix* m);
NAMO_API namo_status namo_matrix_shape(const namo_matrix* m, size_t* rows, size_t* cols);
/* Copies rows * cols entries into `out`, which must hold `capacity` doubles. */
NAMO_API namo_status namo_matrix_copy_data(const namo_matrix* m, double* out, size_t capacity);

NAMO_API namo_status namo_frobenius_norm(const namo_matrix* m, double* out);
NAMO_API namo_status namo_spectral_norm(const namo_matrix* m, double* out);
NAMO_API namo_status namo_nuclear_norm(const namo_matrix* m, double* out);

/* ---- orthogonalization ------------------------------------------------- */

typedef enum namo_orth_method { NAMO_ORTH_EXACT = 0, NAMO_ORTH_NEWTON_SCHULZ = 1 } namo_orth_method;

typedef struct namo_orth_config {
  namo_orth_method method;
  int ns_iterations;
  double ns_coefficients[3];
  double rank_tolerance;
  double zero_threshold;
} namo_orth_config;

NAMO_API void namo_orth_config_init(namo_orth_config* cfg);
/* Allocates a new matrix with the polar factor of `m`. */
NAMO_API namo_status namo_orthogonalize(const namo_matrix* m, const namo_orth_config* cfg,
                                        namo_matrix** out);

/* ---- optimizers -------------------------------------------------------- */

typedef enum namo_optimizer_kind {
  NAMO_OPT_NAMO = 0,
  NAMO_OPT_NAMO_D = 1,
  NAMO_OPT_MUON = 2,
  NAMO_OPT_ADAMW = 3
} namo_optimizer_kind;

typedef struct namo_hyperparams {
  double eta;
  double mu1;
  double mu2;
  double epsilon;
  double weight_decay;
  double clamp_c;
  namo_orth_config orth;
} namo_hyperparams;

/* Library defaults for `kind`. */
NAMO_API void namo_hyperparams_init(namo_hyperparams* hp, namo_optimizer_kind kind);

typedef struct namo_step_diagnostics {
  int has_alpha;
  double alpha;
  int has_d;
  double d_bar;
  double d_min;
  double d_max;
  double update_frobenius;
} namo_step_diagnostics;

typedef struct namo_optimizer namo_optimizer;

NAMO_API namo_status namo_optimizer_create(namo_optimizer_kind kind, size_t rows, size_t cols,
                                           namo_optimizer** out);
NAMO_API void namo_optimizer_destroy(namo_optimizer* opt);
/* Updates `theta` in place. `diag` may be NULL. */
NAMO_API namo_status namo_optimizer_step(namo_optimizer* opt, namo_matrix* theta,
                                         const namo_matrix* grad, const namo_hyperparams* hp,
                                         namo_step_diagnostics* diag);
NAMO_API namo_status namo_optimizer_steps(const namo_optimizer* opt, uint64_t* out);

/* 1 when a parameter with these dims gets the matrix rule, 0 for the AdamW fallback. */
NAMO_API namo_status namo_route_parameter(const size_t* dims, size_t ndims, int* matrix_rule);

/* ---- problems ---------------------------------------------------------- */

typedef struct namo_problem namo_problem;

/* `dims` may be NULL with ndims = 0 for the defaults. */
NAMO_API namo_status namo_problem_create(const char* name, const size_t* dims, size_t ndims,
                                         size_t dataset_size, uint64_t seed, namo_problem** out);
NAMO_API void namo_problem_destroy(namo_problem* p);
NAMO_API namo_status namo_problem_param_count(const namo_problem* p, size_t* out);
/* Allocates the initial value of parameter `index`. */
NAMO_API namo_status namo_problem_initial_param(const namo_problem* p, uint64_t seed, size_t index,
                                                namo_matrix** out);
NAMO_API namo_status namo_problem_loss(const namo_problem* p, const namo_matrix* const* params,
                                       size_t count, double* out);
/* Writes `count` newly allocated gradient matrices into `out`. */
NAMO_API namo_status namo_problem_grad(const namo_problem* p, const namo_matrix* const* params,
                                       size_t count, namo_matrix** out);

/* ---- commands ---------------------------------------------------------- */

NAMO_API namo_status namo_cmd_run(const char* config_path, const char* out_dir);
/* `etas` or `cs` may be NULL with length 0; empty etas selects the default grid. */
NAMO_API namo_status namo_cmd_sweep(const char* config_path, const double* etas, size_t n_etas,
                                    const double* cs, size_t n_cs, const char* out_dir);

typedef struct namo_rates_request {
  const char* problem;
  namo_optimizer_kind optimizer;
  const size_t* horizons;
  size_t n_horizons;
  int stochastic;
  double eta_multiplier;
  double sigma;
  size_t batch_size;
  double clamp_c;
  uint64_t seed;
} namo_rates_request;

NAMO_API void namo_rates_request_init(namo_rates_request* req);
NAMO_API namo_status namo_cmd_rates(const namo_rates_request* req, const char* out_dir,
                                    double* slope);

/* Returns NAMO_ERR_CHECK_FAILED when any lemma check fails; files are still written. */
NAMO_API namo_status namo_cmd_verify_lemmas(size_t trials, uint64_t seed, double bound_shift,
                                            const char* out_dir);

typedef struct namo_batch_request {
  const char* problem;
  namo_optimizer_kind optimizer;
  size_t horizon;
  double sigma;
  const size_t* batch_sizes;
  size_t n_batch_sizes;
  const uint64_t* seeds;
  size_t n_seeds;
} namo_batch_request;

NAMO_API void namo_batch_request_init(namo_batch_request* req);
NAMO_API namo_status namo_cmd_batch_adapt(const namo_batch_request* req, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
