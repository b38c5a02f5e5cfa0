#ifndef SUBMEAN_H
#define SUBMEAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmKRule {
  SM_K_RULE_PAPER = 0,
  SM_K_RULE_PRACTICAL = 1,
  // Uses `fixed_k`.
  SM_K_RULE_FIXED = 2,
} SmKRule;

// Result codes.
typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_PARAMETER = 2,
  SM_STATUS_CORRUPT_PARTITION = 3,
  SM_STATUS_BUDGET_EXCEEDED = 4,
  SM_STATUS_PARSE = 5,
  SM_STATUS_BUFFER_TOO_SMALL = 6,
  SM_STATUS_PANIC = 7,
} SmStatus;

typedef enum SmMethod {
  SM_METHOD_SAMPLE_MEAN = 0,
  SM_METHOD_MOM = 1,
  SM_METHOD_GEOMEDIAN_MOM = 2,
  SM_METHOD_LM = 3,
} SmMethod;

typedef enum SmProfile {
  // Constants (400, 240).
  SM_PROFILE_PAPER = 0,
  // Constants (2, 2).
  SM_PROFILE_PRACTICAL = 1,
} SmProfile;

// Opaque sample set.
typedef struct SmSampleSet SmSampleSet;

// Estimator settings. Start from [`sm_estimator_config_default`].
typedef struct SmEstimatorConfig {
  double delta;
  enum SmKRule k_rule;
  size_t fixed_k;
  bool odd_k;
  uint64_t seed;
} SmEstimatorConfig;

// Outcome of a pairwise defeat test.
typedef struct SmDefeat {
  size_t blocks_for_a;
  size_t blocks_for_b;
  size_t ties;
  size_t k;
  bool a_defeats_b;
  bool b_defeats_a;
} SmDefeat;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *sm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sm_version(void);

struct SmEstimatorConfig sm_estimator_config_default(void);

// Copies `n * dim` row-major values into a new sample set.
//
// # Safety
// `data` must point to `n * dim` readable doubles and `out` to writable storage.
enum SmStatus sm_samples_new(const double *data, size_t n, size_t dim, struct SmSampleSet **out);

// Releases a sample set. Null is ignored.
//
// # Safety
// `samples` must come from [`sm_samples_new`] and not be used afterwards.
void sm_samples_free(struct SmSampleSet *samples);

// # Safety
// `samples` must be a live handle or null.
size_t sm_samples_len(const struct SmSampleSet *samples);

// # Safety
// `samples` must be a live handle or null.
size_t sm_samples_dim(const struct SmSampleSet *samples);

// Runs an estimator and writes `dim` values to `out`. `out_k` may be null.
//
// # Safety
// `samples` and `config` must be valid; `out` must hold `out_len` doubles.
enum SmStatus sm_estimate(const struct SmSampleSet *samples,
                          enum SmMethod method,
                          const struct SmEstimatorConfig *config,
                          double *out,
                          size_t out_len,
                          size_t *out_k);

// Block count for `n` samples, clamped to `n` when the rule asks for more.
//
// # Safety
// `out_k` must be writable.
enum SmStatus sm_choose_k(double delta,
                          size_t n,
                          enum SmKRule rule,
                          size_t fixed_k,
                          bool odd_k,
                          size_t *out_k);

// Radius `max(c1·sqrt(trace/n), c2·sqrt(lambda_max·ln(2/delta)/n))`.
//
// # Safety
// `out_r` must be writable.
enum SmStatus sm_radius_bound(double trace,
                              double lambda_max,
                              size_t n,
                              double delta,
                              enum SmProfile profile,
                              double *out_r);

// Compares `a` and `b` over `k` contiguous blocks of `samples`.
//
// # Safety
// `a` and `b` must hold `dim` doubles each; `out` must be writable.
enum SmStatus sm_defeats(const struct SmSampleSet *samples,
                         size_t k,
                         const double *a,
                         const double *b,
                         struct SmDefeat *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBMEAN_H */
