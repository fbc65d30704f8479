#ifndef RSI_H
#define RSI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RsiStatus {
  RSI_STATUS_OK = 0,
  RSI_STATUS_INVALID_ARGUMENT = 1,
  RSI_STATUS_NOT_APPLICABLE = 2,
  RSI_STATUS_SOLVER = 3,
  RSI_STATUS_INFEASIBLE = 4,
  RSI_STATUS_VERIFY = 5,
  RSI_STATUS_NULL_POINTER = 6,
  RSI_STATUS_PANIC = 7,
} RsiStatus;

typedef enum RsiBackend {
  RSI_BACKEND_SOS = 0,
  RSI_BACKEND_LP = 1,
  RSI_BACKEND_MONOTONE = 2,
  RSI_BACKEND_GRID = 3,
  RSI_BACKEND_AUTO = 4,
} RsiBackend;

typedef enum RsiController {
  RSI_CONTROLLER_POLICY = 0,
  RSI_CONTROLLER_QP = 1,
  RSI_CONTROLLER_ZERO = 2,
} RsiController;

typedef enum RsiAdversary {
  RSI_ADVERSARY_UPPER_CORNER = 0,
  RSI_ADVERSARY_LOWER_CORNER = 1,
  RSI_ADVERSARY_RANDOM = 2,
  RSI_ADVERSARY_GREEDY = 3,
} RsiAdversary;

/**
 * Index values of one system.
 */
typedef struct RsiIndexReport RsiIndexReport;

/**
 * A synthesized policy certificate.
 */
typedef struct RsiPolicy RsiPolicy;

/**
 * An interconnected system together with its stored run options.
 */
typedef struct RsiSystem RsiSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Free with `rsi_string_free`.
 */
char *rsi_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library that was not yet freed.
 */
void rsi_string_free(char *s);

/**
 * Library version as a static string; do not free.
 */
const char *rsi_version(void);

/**
 * Parses a system document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RsiStatus rsi_system_from_json(const char *json, struct RsiSystem **out);

/**
 * Loads the packaged three-room system for scenario 1 or 2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RsiStatus rsi_system_case_study(uint32_t scenario, struct RsiSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from this library that was not yet freed.
 */
void rsi_system_free(struct RsiSystem *sys);

/**
 * Number of states, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
uintptr_t rsi_system_num_states(const struct RsiSystem *sys);

/**
 * Number of inputs, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
uintptr_t rsi_system_num_inputs(const struct RsiSystem *sys);

/**
 * Number of safety constraints, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
uintptr_t rsi_system_num_constraints(const struct RsiSystem *sys);

/**
 * Computes every intrinsic and coupled index with the given backend.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum RsiStatus rsi_compute_report(const struct RsiSystem *sys,
                                  enum RsiBackend backend,
                                  struct RsiIndexReport **out);

/**
 * Intrinsic index of vulnerable sub-system `subsystem` on constraint `constraint`.
 *
 * # Safety
 * `report` must be a live handle and `value` a valid pointer.
 */
enum RsiStatus rsi_report_gamma(const struct RsiIndexReport *report,
                                uintptr_t subsystem,
                                uintptr_t constraint,
                                double *value);

/**
 * Coupled index of constraint `constraint`.
 *
 * # Safety
 * `report` must be a live handle and `value` a valid pointer.
 */
enum RsiStatus rsi_report_beta(const struct RsiIndexReport *report,
                               uintptr_t constraint,
                               double *value);

/**
 * Report document as JSON, or null for a null handle. Free with `rsi_string_free`.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *rsi_report_to_json(const struct RsiIndexReport *report);

/**
 * # Safety
 * `report` must be null or a handle from this library that was not yet freed.
 */
void rsi_report_free(struct RsiIndexReport *report);

/**
 * Synthesizes SOS policies for the protected sub-systems. On `RSI_STATUS_INFEASIBLE`
 * the certificate is still returned so that its programs can be inspected.
 *
 * # Safety
 * `sys` and `report` must be live handles and `out` a valid pointer.
 */
enum RsiStatus rsi_synthesize(const struct RsiSystem *sys,
                              const struct RsiIndexReport *report,
                              struct RsiPolicy **out);

/**
 * # Safety
 * `policy` must be null or a live handle.
 */
bool rsi_policy_is_feasible(const struct RsiPolicy *policy);

/**
 * Writes the clamped policy inputs at state `x` into `u`; channels of
 * sub-systems without a policy are set to 0.
 *
 * # Safety
 * `x` must point to `n` readable values and `u` to `r` writable values.
 */
enum RsiStatus rsi_policy_evaluate(const struct RsiPolicy *policy,
                                   const struct RsiSystem *sys,
                                   const double *x,
                                   uintptr_t n,
                                   double *u,
                                   uintptr_t r);

/**
 * Policy document as JSON, or null for a null handle. Free with `rsi_string_free`.
 *
 * # Safety
 * `policy` must be null or a live handle.
 */
char *rsi_policy_to_json(const struct RsiPolicy *policy);

/**
 * Parses a policy document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RsiStatus rsi_policy_from_json(const char *json, struct RsiPolicy **out);

/**
 * # Safety
 * `policy` must be null or a handle from this library that was not yet freed.
 */
void rsi_policy_free(struct RsiPolicy *policy);

/**
 * Simulates one episode with the stored step settings from `x0` and writes
 * the smallest value of every constraint into `min_h` (`k` entries).
 * `policy` is required by `RSI_CONTROLLER_POLICY`, `report` by `RSI_CONTROLLER_QP`.
 *
 * # Safety
 * Handles must be live or null where allowed; `x0` must point to `n` values,
 * `min_h` to `k` writable values and `violated` to one writable bool.
 */
enum RsiStatus rsi_simulate(const struct RsiSystem *sys,
                            const struct RsiPolicy *policy,
                            const struct RsiIndexReport *report,
                            enum RsiController controller,
                            enum RsiAdversary adversary,
                            uint64_t seed,
                            const double *x0,
                            uintptr_t n,
                            double *min_h,
                            uintptr_t k,
                            bool *violated);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RSI_H */
