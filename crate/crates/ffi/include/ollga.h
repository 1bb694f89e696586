#ifndef OLLGA_H
#define OLLGA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum OllgaStatus {
  OLLGA_STATUS_OK = 0,
  OLLGA_STATUS_NULL_POINTER = 1,
  OLLGA_STATUS_INVALID_ARGUMENT = 2,
  OLLGA_STATUS_LENGTH_MISMATCH = 3,
  OLLGA_STATUS_BUFFER_TOO_SMALL = 4,
  OLLGA_STATUS_PANIC = 5,
  OLLGA_STATUS_INTERNAL = 6,
} OllgaStatus;

typedef enum OllgaVariant {
  OLLGA_VARIANT_STANDARD = 0,
  /**
   * The best of all mutation and crossover offspring competes with the parent.
   */
  OLLGA_VARIANT_ALL_COMPETE = 1,
} OllgaVariant;

/**
 * A OneMax instance with a hidden target string.
 */
typedef struct OllgaInstance OllgaInstance;

/**
 * Algorithm parameters `(n, lambda, k, r)`, variant and budget.
 */
typedef struct OllgaParams OllgaParams;

/**
 * Outcome of one optimization run.
 */
typedef struct OllgaRunOutcome {
  uint64_t iterations;
  uint64_t evaluations;
  bool success;
  uint64_t seed;
  uint64_t final_distance;
} OllgaRunOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread, or null if the
 * last call succeeded. The pointer is valid until the next call into this
 * library on the same thread.
 */
const char *ollga_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *ollga_status_message(enum OllgaStatus status);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ollga_version(void);

/**
 * Classic OneMax (target all ones) on `n` bits.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum OllgaStatus ollga_instance_new_classic(size_t n, struct OllgaInstance **out);

/**
 * OneMax with the given target; `target` holds `n` bytes, each 0 or 1.
 *
 * # Safety
 * `target` must point to `n` readable bytes and `out` to writable storage
 * for one handle.
 */
enum OllgaStatus ollga_instance_new(const uint8_t *target, size_t n, struct OllgaInstance **out);

/**
 * OneMax with a uniformly random target drawn from `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum OllgaStatus ollga_instance_new_random(size_t n, uint64_t seed, struct OllgaInstance **out);

/**
 * Releases an instance. Null is ignored.
 *
 * # Safety
 * `inst` must be null or a handle from `ollga_instance_new*` that has not
 * been freed.
 */
void ollga_instance_free(struct OllgaInstance *inst);

/**
 * Number of bits, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t ollga_instance_len(const struct OllgaInstance *inst);

/**
 * Writes the target string (one byte per bit) into `buf`.
 *
 * # Safety
 * `inst` must be a live handle and `buf` must point to `len` writable bytes.
 */
enum OllgaStatus ollga_instance_target(const struct OllgaInstance *inst, uint8_t *buf, size_t len);

/**
 * Fitness of `x` (`len` bytes, each 0 or 1).
 *
 * # Safety
 * `inst` must be a live handle, `x` must point to `len` readable bytes and
 * `fitness` to writable storage.
 */
enum OllgaStatus ollga_instance_evaluate(const struct OllgaInstance *inst,
                                         const uint8_t *x,
                                         size_t len,
                                         size_t *fitness);

/**
 * Parameters with `0 < k <= n` and `0 < r <= k`, standard variant and the
 * default budget.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum OllgaStatus ollga_params_new(size_t n,
                                  size_t lambda,
                                  double k,
                                  double r,
                                  struct OllgaParams **out);

/**
 * Parameters `lambda = k = round(lambda*(n))`, `r = 1`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum OllgaStatus ollga_params_suggested(size_t n, struct OllgaParams **out);

/**
 * # Safety
 * `params` must be a live handle.
 */
enum OllgaStatus ollga_params_set_variant(struct OllgaParams *params, enum OllgaVariant variant);

/**
 * Sets the evaluation budget; 0 restores the default `1e4 n log2 n`.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum OllgaStatus ollga_params_set_budget(struct OllgaParams *params, uint64_t budget);

/**
 * Population size, or 0 for a null handle.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
size_t ollga_params_lambda(const struct OllgaParams *params);

/**
 * # Safety
 * `params` must be null or a handle from `ollga_params_*` that has not been
 * freed.
 */
void ollga_params_free(struct OllgaParams *params);

/**
 * Runs the GA from a random start until the optimum or the budget.
 *
 * # Safety
 * `params` and `inst` must be live handles and `out` must be writable.
 */
enum OllgaStatus ollga_run(const struct OllgaParams *params,
                           const struct OllgaInstance *inst,
                           uint64_t seed,
                           struct OllgaRunOutcome *out);

/**
 * Runs the (1+1) EA with standard bit mutation at `rate`; `budget` 0 means
 * the default.
 *
 * # Safety
 * `inst` must be a live handle and `out` must be writable.
 */
enum OllgaStatus ollga_run_opo_ea(const struct OllgaInstance *inst,
                                  double rate,
                                  uint64_t seed,
                                  uint64_t budget,
                                  struct OllgaRunOutcome *out);

/**
 * `sqrt(log n loglog n / logloglog n)` with clamped logarithms.
 */
double ollga_lambda_star(double n);

/**
 * `n log n / lambda*(n)`.
 */
double ollga_f_star(double n);

/**
 * `max(n log n / lambda, n lambda loglog lambda / log lambda)`.
 */
double ollga_two_term_runtime(double n, double lambda);

/**
 * Probabilities of `B(n, p)` at `*start, *start + 1, ...` into `buf`. On
 * `BUFFER_TOO_SMALL`, `*written` holds the required length.
 *
 * # Safety
 * `buf` must point to `len` writable doubles; `start` and `written` must be
 * writable.
 */
enum OllgaStatus ollga_binomial_pmf(uint64_t n,
                                    double p,
                                    double *buf,
                                    size_t len,
                                    uint64_t *start,
                                    size_t *written);

/**
 * Hypergeometric law of the number of marked items among `draws` drawn
 * without replacement from `population`. Same buffer protocol as
 * [`ollga_binomial_pmf`].
 *
 * # Safety
 * As for [`ollga_binomial_pmf`].
 */
enum OllgaStatus ollga_hypergeometric_pmf(uint64_t population,
                                          uint64_t draws,
                                          uint64_t marked,
                                          double *buf,
                                          size_t len,
                                          uint64_t *start,
                                          size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OLLGA_H */
