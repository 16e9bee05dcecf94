/*
 * C interface to the jdsem library: structural equation models for
 * jump-diffusion latent processes, fitted to high-frequency observations by
 * a jump-truncated quasi-likelihood and compared with QBIC / QAIC.
 *
 * Every object is an opaque handle released with its *_free function.  Every
 * fallible call returns a jdsem_status; on failure, jdsem_last_error() holds
 * a message for the calling thread until its next failing call.
 */
#ifndef JDSEM_H
#define JDSEM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(JDSEM_BUILDING)
#    define JDSEM_API __declspec(dllexport)
#  else
#    define JDSEM_API __declspec(dllimport)
#  endif
#else
#  define JDSEM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jdsem_status {
  JDSEM_OK = 0,
  JDSEM_ERR_INVALID_ARGUMENT = 1,
  JDSEM_ERR_DIMENSION_MISMATCH = 2,
  JDSEM_ERR_GAP_IN_PARAM_INDICES = 3,
  JDSEM_ERR_ASYMMETRIC_ENTRY_MAP = 4,
  JDSEM_ERR_NONZERO_B_DIAGONAL = 5,
  JDSEM_ERR_SINGULAR_PSI = 6,
  JDSEM_ERR_NOT_POSITIVE_DEFINITE = 7,
  JDSEM_ERR_NON_ORTHONORMAL_F = 8,
  JDSEM_ERR_INIT_NOT_PD = 9,
  JDSEM_ERR_ALL_STARTS_FAILED = 10,
  JDSEM_ERR_EMPTY_CANDIDATE_LIST = 11,
  JDSEM_ERR_NON_UNIFORM_GRID = 12,
  JDSEM_ERR_MALFORMED_ROW = 13,
  JDSEM_ERR_TOO_FEW_ROWS = 14,
  JDSEM_ERR_PARSE = 15,
  JDSEM_ERR_IO = 16,
  JDSEM_ERR_NO_INIT = 17,
  JDSEM_ERR_INTERNAL = 99
} jdsem_status;

typedef enum jdsem_criterion { JDSEM_QBIC = 0, JDSEM_QAIC = 1 } jdsem_criterion;

typedef struct jdsem_model jdsem_model;
typedef struct jdsem_path jdsem_path;
typedef struct jdsem_stats jdsem_stats;
typedef struct jdsem_fit jdsem_fit;
typedef struct jdsem_experiment jdsem_experiment;
typedef struct jdsem_table jdsem_table;

JDSEM_API const char* jdsem_version(void);
JDSEM_API const char* jdsem_status_name(jdsem_status status);
JDSEM_API const char* jdsem_last_error(void);
/* Nonzero for failures of the numerics (singular I - B, non-PD covariance,
 * failed starts) as opposed to bad input. */
JDSEM_API int jdsem_status_is_numerical(jdsem_status status);

/* ---- models ------------------------------------------------------------ */

JDSEM_API jdsem_status jdsem_model_load(const char* path, jdsem_model** out);
/* "model1", "model2" or "model3". */
JDSEM_API jdsem_status jdsem_model_preset(const char* name, jdsem_model** out);
JDSEM_API void jdsem_model_free(jdsem_model* model);

JDSEM_API const char* jdsem_model_name(const jdsem_model* model);
JDSEM_API size_t jdsem_model_num_params(const jdsem_model* model);
JDSEM_API size_t jdsem_model_num_observables(const jdsem_model* model);
/* 1 if the model file carried an `init` point. */
JDSEM_API int jdsem_model_has_init(const jdsem_model* model);
/* Copies the init point into out[0..num_params). */
JDSEM_API jdsem_status jdsem_model_init(const jdsem_model* model, double* out, size_t len);
/* Implied covariance at theta, written row-major into out[0..p*p). */
JDSEM_API jdsem_status jdsem_model_sigma(const jdsem_model* model, const double* theta, size_t len, double* out,
                                         size_t out_len, int* positive_definite);
/* Rank of d vech(Sigma) / d theta' at theta. */
JDSEM_API jdsem_status jdsem_model_rank(const jdsem_model* model, const double* theta, size_t len, size_t* rank);

/* Reads whitespace/comma separated reals into a newly allocated array that
 * the caller releases with jdsem_free_doubles. */
JDSEM_API jdsem_status jdsem_read_theta(const char* path, double** values, size_t* len);
JDSEM_API void jdsem_free_doubles(double* values);

/* ---- paths ------------------------------------------------------------- */

/* preset "reference" is the only built-in true model. */
JDSEM_API jdsem_status jdsem_simulate_preset(const char* preset, size_t n, double t_end, uint64_t seed,
                                             jdsem_path** out);
JDSEM_API jdsem_status jdsem_simulate_config(const char* true_model_path, size_t n, double t_end, uint64_t seed,
                                             jdsem_path** out);
JDSEM_API jdsem_status jdsem_path_read_csv(const char* path, jdsem_path** out);
JDSEM_API jdsem_status jdsem_path_write_csv(const jdsem_path* path, const char* file);
JDSEM_API void jdsem_path_free(jdsem_path* path);
JDSEM_API size_t jdsem_path_steps(const jdsem_path* path);
JDSEM_API size_t jdsem_path_dim(const jdsem_path* path);
JDSEM_API double jdsem_path_step(const jdsem_path* path);
/* Observation i (0..steps) column j. */
JDSEM_API double jdsem_path_value(const jdsem_path* path, size_t i, size_t j);

/* ---- truncation statistics --------------------------------------------- */

JDSEM_API jdsem_status jdsem_stats_compute(const jdsem_path* path, double d, double rho, jdsem_stats** out);
JDSEM_API void jdsem_stats_free(jdsem_stats* stats);
JDSEM_API size_t jdsem_stats_steps(const jdsem_stats* stats);
JDSEM_API size_t jdsem_stats_kept(const jdsem_stats* stats);
JDSEM_API double jdsem_stats_threshold(const jdsem_stats* stats);

/* ---- fitting ----------------------------------------------------------- */

typedef enum jdsem_init_mode {
  JDSEM_INIT_MODEL = 0,  /* the model's init point */
  JDSEM_INIT_GIVEN = 1,  /* options.init[0..init_len) */
  JDSEM_INIT_MULTI = 2   /* options.starts random starts from options.seed */
} jdsem_init_mode;

typedef struct jdsem_fit_options {
  jdsem_init_mode init_mode;
  const double* init;
  size_t init_len;
  size_t starts;
  uint64_t seed;
  int max_iters;
  double grad_tol;
  double step_tol;
  int log_positives;
} jdsem_fit_options;

JDSEM_API void jdsem_fit_options_default(jdsem_fit_options* options);
JDSEM_API jdsem_status jdsem_fit_model(const jdsem_model* model, const jdsem_stats* stats,
                                       const jdsem_fit_options* options, jdsem_fit** out);
JDSEM_API void jdsem_fit_free(jdsem_fit* fit);

JDSEM_API double jdsem_fit_h(const jdsem_fit* fit);
JDSEM_API double jdsem_fit_qbic(const jdsem_fit* fit);
JDSEM_API double jdsem_fit_qaic(const jdsem_fit* fit);
JDSEM_API int jdsem_fit_converged(const jdsem_fit* fit);
JDSEM_API int jdsem_fit_iterations(const jdsem_fit* fit);
JDSEM_API double jdsem_fit_grad_norm(const jdsem_fit* fit);
JDSEM_API size_t jdsem_fit_kept(const jdsem_fit* fit);
JDSEM_API size_t jdsem_fit_num_params(const jdsem_fit* fit);
JDSEM_API const char* jdsem_fit_model_name(const jdsem_fit* fit);
JDSEM_API const char* jdsem_fit_stop_reason(const jdsem_fit* fit);
JDSEM_API jdsem_status jdsem_fit_theta(const jdsem_fit* fit, double* out, size_t len);

/* Index of the winning fit; ties go to the smaller q, then the lower name.
 * *tie is set to 1 when another candidate had exactly the winning value. */
JDSEM_API jdsem_status jdsem_select(const jdsem_fit* const* fits, size_t count, jdsem_criterion criterion,
                                    size_t* winner, int* tie);

/* P(chi^2_dq > 2 dq); NaN for dq == 0. */
JDSEM_API double jdsem_qaic_overfit_probability(unsigned dq);

/* ---- experiments ------------------------------------------------------- */

JDSEM_API jdsem_status jdsem_experiment_load(const char* path, jdsem_experiment** out);
/* Five-plus-ten indicator setup with the three built-in candidates. */
JDSEM_API jdsem_status jdsem_experiment_reference(jdsem_experiment** out);
JDSEM_API void jdsem_experiment_free(jdsem_experiment* exp);
JDSEM_API jdsem_status jdsem_experiment_set_replications(jdsem_experiment* exp, size_t replications);
JDSEM_API jdsem_status jdsem_experiment_set_n_grid(jdsem_experiment* exp, const size_t* n_grid, size_t len);
JDSEM_API jdsem_status jdsem_experiment_set_seed(jdsem_experiment* exp, uint64_t seed);
JDSEM_API jdsem_status jdsem_experiment_set_threads(jdsem_experiment* exp, unsigned threads);
JDSEM_API jdsem_status jdsem_experiment_run(const jdsem_experiment* exp, jdsem_table** out);

JDSEM_API void jdsem_table_free(jdsem_table* table);
JDSEM_API size_t jdsem_table_num_models(const jdsem_table* table);
JDSEM_API const char* jdsem_table_model_name(const jdsem_table* table, size_t model);
JDSEM_API size_t jdsem_table_num_n(const jdsem_table* table);
JDSEM_API size_t jdsem_table_n(const jdsem_table* table, size_t n_index);
JDSEM_API size_t jdsem_table_replications(const jdsem_table* table);
JDSEM_API size_t jdsem_table_count(const jdsem_table* table, jdsem_criterion criterion, size_t n_index,
                                   size_t model);
JDSEM_API size_t jdsem_table_failed(const jdsem_table* table, size_t n_index);
/* Human-readable rendering; the string lives as long as the table. */
JDSEM_API const char* jdsem_table_text(const jdsem_table* table);
JDSEM_API jdsem_status jdsem_table_write_csv(const jdsem_table* table, const char* file);

#ifdef __cplusplus
}
#endif

#endif /* JDSEM_H */
