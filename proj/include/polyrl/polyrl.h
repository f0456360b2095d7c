#ifndef POLYRL_POLYRL_H_
#define POLYRL_POLYRL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define POLYRL_API __declspec(dllexport)
#else
#define POLYRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/*
 * Status codes. Every function returns one of these. On failure a message is
 * available from polyrl_last_error() on the calling thread.
 */
enum polyrl_status {
  POLYRL_OK = 0,
  POLYRL_ERR_LENGTH_MISMATCH = 1,
  POLYRL_ERR_EMPTY_BATCH = 2,
  POLYRL_ERR_SET_SIZE_TOO_LARGE = 3,
  POLYRL_ERR_K_OUT_OF_RANGE = 4,
  POLYRL_ERR_MISSING_CLUSTERS = 5,
  POLYRL_ERR_DEGENERATE_N = 6,
  POLYRL_ERR_DIMENSION_MISMATCH = 7,
  POLYRL_ERR_TOO_MANY_RESPONSES = 8,
  POLYRL_ERR_MALFORMED_JSON = 9,
  POLYRL_ERR_WRONG_KEY_COUNT = 10,
  POLYRL_ERR_MISSING_CLUSTER_ID = 11,
  POLYRL_ERR_JUDGE_UNAVAILABLE = 12,
  POLYRL_ERR_ENUMERATION_TOO_LARGE = 13,
  POLYRL_ERR_INVALID_PARAMS = 14,
  POLYRL_ERR_CONFIG_INVALID = 15,
  POLYRL_ERR_IO_ERROR = 16,
  POLYRL_ERR_K_EXCEEDS_N = 17,
  POLYRL_ERR_EMPTY_INPUT = 18,
  POLYRL_ERR_INTERNAL = 19,
  POLYRL_ERR_NULL_POINTER = 20,
  POLYRL_ERR_BUFFER_TOO_SMALL = 21,
  POLYRL_ERR_INVALID_HANDLE = 22
};

POLYRL_API const char* polyrl_version(void);
/* "OK", "CONFIG_INVALID", ...; "UNKNOWN" for values outside the enum. */
POLYRL_API const char* polyrl_status_name(int status);
/* Message of the last failed call on this thread; "" after a success. */
POLYRL_API const char* polyrl_last_error(void);

/*
 * String outputs: pass a buffer and its capacity in *len. The call writes the
 * NUL-terminated text and sets *len to its size including the terminator. If
 * out is NULL or too small, *len receives the required size and the call
 * returns POLYRL_ERR_BUFFER_TOO_SMALL.
 */

/* ---- set engine and objectives ------------------------------------------ */

/* objective: "polychromic", "pass_at_n" or "mean_reward". clusters may be NULL
 * for objectives that ignore diversity. k = 0 uses all C(N, n) subsets. */
POLYRL_API int polyrl_marginal_advantages(const double* rewards, const int* clusters, size_t big_n,
                                          size_t n, uint64_t k, uint64_t seed,
                                          const char* objective, double* out);
POLYRL_API int polyrl_grpo_advantages(const double* rewards, size_t big_n, double* out);
POLYRL_API int polyrl_divrl_advantages(const double* rewards, const int* clusters, size_t big_n,
                                       double lambda, double* out);
POLYRL_API int polyrl_scaling_factor(size_t big_n, size_t n, uint64_t k, double* out);
POLYRL_API int polyrl_diversity(const int* clusters, size_t n, double* out);
POLYRL_API int polyrl_divrl_bonus(const int* clusters, size_t big_n, size_t i, double* out);
POLYRL_API int polyrl_pass_at_k(size_t big_n, size_t c, size_t k, double* out);

/* ---- tasks and policies ------------------------------------------------- */

typedef struct polyrl_task_st* polyrl_task_t;
typedef struct polyrl_policy_st* polyrl_policy_t;

/* task_json: the "task" object of an experiment config. */
POLYRL_API int polyrl_task_create(polyrl_task_t* task, const char* task_json);
POLYRL_API int polyrl_task_destroy(polyrl_task_t task);
POLYRL_API int polyrl_task_size(polyrl_task_t task, size_t* size);
POLYRL_API int polyrl_task_action(polyrl_task_t task, size_t action, double* reward, int* cluster,
                                  char* text, size_t* text_len);

POLYRL_API int polyrl_policy_create(polyrl_policy_t* policy, const double* logits, size_t size,
                                    double temperature);
POLYRL_API int polyrl_policy_destroy(polyrl_policy_t policy);
POLYRL_API int polyrl_policy_probabilities(polyrl_policy_t policy, double* out, size_t size);

/* Exact enumeration oracles; out holds one value per action. */
POLYRL_API int polyrl_exact_expected_objective(polyrl_policy_t policy, polyrl_task_t task,
                                               const char* objective, size_t n, double* out);
POLYRL_API int polyrl_exact_setrl_gradient(polyrl_policy_t policy, polyrl_task_t task,
                                           const char* objective, size_t n, double* out,
                                           size_t size);
POLYRL_API int polyrl_exact_marginal_advantages(polyrl_policy_t policy, polyrl_task_t task,
                                                const char* objective, size_t n, double* out,
                                                size_t size);

/* ---- judge protocol ----------------------------------------------------- */

POLYRL_API int polyrl_judge_prompt(const char* context, const char* const* responses,
                                   size_t count, char* out, size_t* len);
/* Writes count cluster ids (after validation and remapping) to cluster_ids. */
POLYRL_API int polyrl_judge_parse(const char* raw, size_t count, int* cluster_ids);

/* ---- experiments -------------------------------------------------------- */

typedef struct polyrl_experiment_st* polyrl_experiment_t;
typedef struct polyrl_report_st* polyrl_report_t;

POLYRL_API int polyrl_default_config(char* out, size_t* len);
/* Normalizes a config: parses, validates and echoes it with defaults filled. */
POLYRL_API int polyrl_config_normalize(const char* config_json, char* out, size_t* len);

/* Trains and evaluates. Artifacts are written when the config names an
 * output directory. */
POLYRL_API int polyrl_experiment_run(polyrl_experiment_t* exp, const char* config_json);
POLYRL_API int polyrl_experiment_destroy(polyrl_experiment_t exp);
POLYRL_API int polyrl_experiment_steps(polyrl_experiment_t exp, size_t* steps);
POLYRL_API int polyrl_experiment_metrics_csv(polyrl_experiment_t exp, char* out, size_t* len);
POLYRL_API int polyrl_experiment_summary_json(polyrl_experiment_t exp, char* out, size_t* len);
POLYRL_API int polyrl_experiment_final_logits(polyrl_experiment_t exp, double* out, size_t size);

/* Oracle-equivalence suite. draws = 0 keeps the default count. */
POLYRL_API int polyrl_verify(polyrl_report_t* report, uint64_t seed, size_t draws,
                             double scaling_factor_multiplier);
POLYRL_API int polyrl_report_destroy(polyrl_report_t report);
POLYRL_API int polyrl_report_passed(polyrl_report_t report, int* all_passed);
POLYRL_API int polyrl_report_json(polyrl_report_t report, char* out, size_t* len);
POLYRL_API int polyrl_report_text(polyrl_report_t report, char* out, size_t* len);

/* Evaluates a JSONL corpus and returns the metric table as CSV. */
POLYRL_API int polyrl_eval_corpus(const char* path, const size_t* ks, size_t k_count, char* out,
                                  size_t* len);

#ifdef __cplusplus
}
#endif

#endif  // POLYRL_POLYRL_H_
