/* Frequencies, detunings and shifts are in units of Gamma_3. */

#ifndef BIPHOTON_H
#define BIPHOTON_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Validation and convergence codes match the CLI exit codes.
 */
typedef enum BiphotonStatus {
  BIPHOTON_STATUS_OK = 0,
  BIPHOTON_STATUS_NULL_POINTER = 1,
  BIPHOTON_STATUS_VALIDATION = 2,
  BIPHOTON_STATUS_CONVERGENCE = 3,
  BIPHOTON_STATUS_INTERNAL = 4,
  BIPHOTON_STATUS_BUFFER_TOO_SMALL = 5,
  BIPHOTON_STATUS_OUT_OF_RANGE = 6,
  BIPHOTON_STATUS_PANIC = 7,
} BiphotonStatus;

typedef enum BiphotonEvaluatorKind {
  BIPHOTON_EVALUATOR_KIND_CLOSED = 0,
  BIPHOTON_EVALUATOR_KIND_QUAD = 1,
} BiphotonEvaluatorKind;

typedef enum BiphotonScheme {
  BIPHOTON_SCHEME_CO_PROPAGATING = 0,
  BIPHOTON_SCHEME_COUNTER_PROPAGATING = 1,
} BiphotonScheme;

typedef enum BiphotonFamily {
  BIPHOTON_FAMILY_ANTI_CORRELATION = 0,
  BIPHOTON_FAMILY_CORRELATION = 1,
  BIPHOTON_FAMILY_SIGNAL_AXIS = 2,
  BIPHOTON_FAMILY_IDLER_AXIS = 3,
  BIPHOTON_FAMILY_PLUS_FOUR = 4,
  BIPHOTON_FAMILY_CROSS_FOUR = 5,
  BIPHOTON_FAMILY_OCTAGON = 6,
} BiphotonFamily;

typedef enum BiphotonSide {
  BIPHOTON_SIDE_SIGNAL = 0,
  BIPHOTON_SIDE_IDLER = 1,
} BiphotonSide;

/**
 * Amplitude evaluator bound to one set of physical parameters.
 */
typedef struct BiphotonEvaluator BiphotonEvaluator;

/**
 * Schmidt weights, entropy, Schmidt number and optionally the modes.
 */
typedef struct BiphotonSchmidt BiphotonSchmidt;

/**
 * Frequency shifts of the multiplexed ensembles.
 */
typedef struct BiphotonShifts BiphotonShifts;

/**
 * Dimensionful inputs for one ensemble. SI units, except `gamma3n_ratio` and `tau_gamma`,
 * which are dimensionless.
 */
typedef struct BiphotonParams {
  double lambda_s;
  double lambda_i;
  /**
   * rad/s
   */
  double gamma3;
  double gamma3n_ratio;
  double tau_gamma;
  /**
   * K
   */
  double temperature;
  /**
   * kg
   */
  double atomic_mass;
} BiphotonParams;

typedef struct BiphotonComplex {
  double re;
  double im;
} BiphotonComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none has failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *biphoton_last_error(void);

/**
 * Library version as a static string.
 */
const char *biphoton_version(void);

/**
 * Room-temperature ⁸⁷Rb defaults.
 */
struct BiphotonParams biphoton_params_default(void);

/**
 * Checks every parameter and reports all violations in one message.
 *
 * # Safety
 * `params` must be null or point to a valid `BiphotonParams`.
 */
enum BiphotonStatus biphoton_params_validate(const struct BiphotonParams *params);

/**
 * Cold-atom amplitude at (Δω_s, Δω_i).
 *
 * # Safety
 * `params` must point to a valid `BiphotonParams` and `out` to writable storage.
 */
enum BiphotonStatus biphoton_f_cold(const struct BiphotonParams *params,
                                    double ds,
                                    double di,
                                    struct BiphotonComplex *out);

/**
 * Closed-form Doppler-averaged amplitude for co-propagating excitation.
 *
 * # Safety
 * `params` must point to a valid `BiphotonParams` and `out` to writable storage.
 */
enum BiphotonStatus biphoton_f_doppler(const struct BiphotonParams *params,
                                       double ds,
                                       double di,
                                       struct BiphotonComplex *out);

/**
 * Creates an evaluator. `quad_nodes` is ignored by the closed form.
 *
 * # Safety
 * `params` must point to a valid `BiphotonParams`, `kind` and `scheme` must be
 * declared enumerators, and `out` must be writable. On success `*out` owns a
 * handle to release with [`biphoton_evaluator_free`].
 */
enum BiphotonStatus biphoton_evaluator_new(const struct BiphotonParams *params,
                                           enum BiphotonEvaluatorKind kind,
                                           enum BiphotonScheme scheme,
                                           size_t quad_nodes,
                                           struct BiphotonEvaluator **out);

/**
 * # Safety
 * `evaluator` must be null or a handle from [`biphoton_evaluator_new`] not yet freed.
 */
void biphoton_evaluator_free(struct BiphotonEvaluator *evaluator);

/**
 * Single-ensemble amplitude at (Δω_s, Δω_i).
 *
 * # Safety
 * `evaluator` must be a live handle and `out` writable.
 */
enum BiphotonStatus biphoton_evaluator_amplitude(const struct BiphotonEvaluator *evaluator,
                                                 double ds,
                                                 double di,
                                                 struct BiphotonComplex *out);

/**
 * Shifts for a named geometry. `n_mp` is ignored by the four- and eight-cell shapes.
 *
 * # Safety
 * `family` must be a declared enumerator and `out` writable. On success `*out`
 * owns a handle to release with [`biphoton_shifts_free`].
 */
enum BiphotonStatus biphoton_shifts_new(enum BiphotonFamily family,
                                        double dq,
                                        size_t n_mp,
                                        struct BiphotonShifts **out);

/**
 * Shifts given explicitly as parallel arrays of length `n`.
 *
 * # Safety
 * `ds` and `di` must each point to `n` readable doubles and `out` must be
 * writable. On success `*out` owns a handle to release with [`biphoton_shifts_free`].
 */
enum BiphotonStatus biphoton_shifts_from_arrays(const double *ds,
                                                const double *di,
                                                size_t n,
                                                struct BiphotonShifts **out);

/**
 * Number of ensembles, or 0 for a null handle.
 *
 * # Safety
 * `shifts` must be null or a live handle.
 */
size_t biphoton_shifts_len(const struct BiphotonShifts *shifts);

/**
 * # Safety
 * `shifts` must be a live handle; `out_ds` and `out_di` must be writable.
 */
enum BiphotonStatus biphoton_shifts_get(const struct BiphotonShifts *shifts,
                                        size_t index,
                                        double *out_ds,
                                        double *out_di);

/**
 * # Safety
 * `shifts` must be null or a handle not yet freed.
 */
void biphoton_shifts_free(struct BiphotonShifts *shifts);

/**
 * Sum of the single-ensemble amplitude over all shifts.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum BiphotonStatus biphoton_multiplexed_amplitude(const struct BiphotonEvaluator *evaluator,
                                                   const struct BiphotonShifts *shifts,
                                                   double ds,
                                                   double di,
                                                   struct BiphotonComplex *out);

/**
 * Samples the joint spectrum on an `n_points`² grid over ±`half_width` and decomposes it.
 * Modes are computed only when `with_modes` is set.
 *
 * # Safety
 * Both handles must be live and `out` writable. On success `*out` owns a handle
 * to release with [`biphoton_schmidt_free`].
 */
enum BiphotonStatus biphoton_schmidt_new(const struct BiphotonEvaluator *evaluator,
                                         const struct BiphotonShifts *shifts,
                                         double half_width,
                                         size_t n_points,
                                         bool with_modes,
                                         struct BiphotonSchmidt **out);

/**
 * # Safety
 * `schmidt` must be null or a handle not yet freed.
 */
void biphoton_schmidt_free(struct BiphotonSchmidt *schmidt);

/**
 * Entropy of entanglement in bits, or NaN for a null handle.
 *
 * # Safety
 * `schmidt` must be null or a live handle.
 */
double biphoton_schmidt_entropy(const struct BiphotonSchmidt *schmidt);

/**
 * Schmidt number K, or NaN for a null handle.
 *
 * # Safety
 * `schmidt` must be null or a live handle.
 */
double biphoton_schmidt_number(const struct BiphotonSchmidt *schmidt);

/**
 * Copies the descending Schmidt weights.
 *
 * # Safety
 * `schmidt` must be a live handle, `out` must hold `capacity` doubles (or be
 * null when `capacity` is 0), and `written` must be null or writable.
 */
enum BiphotonStatus biphoton_schmidt_lambdas(const struct BiphotonSchmidt *schmidt,
                                             double *out,
                                             size_t capacity,
                                             size_t *written);

/**
 * Number of stored mode pairs; 0 when modes were not requested.
 *
 * # Safety
 * `schmidt` must be null or a live handle.
 */
size_t biphoton_schmidt_mode_count(const struct BiphotonSchmidt *schmidt);

/**
 * Copies the grid frequencies on which the modes are sampled.
 *
 * # Safety
 * As for [`biphoton_schmidt_lambdas`].
 */
enum BiphotonStatus biphoton_schmidt_frequencies(const struct BiphotonSchmidt *schmidt,
                                                 double *out,
                                                 size_t capacity,
                                                 size_t *written);

/**
 * Copies mode `k` of one photon, normalized so that Σ|ψ|²·Δω = 1.
 *
 * # Safety
 * `side` must be a declared enumerator; otherwise as for [`biphoton_schmidt_lambdas`].
 */
enum BiphotonStatus biphoton_schmidt_mode(const struct BiphotonSchmidt *schmidt,
                                          enum BiphotonSide side,
                                          size_t k,
                                          struct BiphotonComplex *out,
                                          size_t capacity,
                                          size_t *written);

/**
 * Number of sampling warnings, such as amplitude clipped by the window.
 *
 * # Safety
 * `schmidt` must be null or a live handle.
 */
size_t biphoton_schmidt_warning_count(const struct BiphotonSchmidt *schmidt);

/**
 * Warning `index`, or null if out of range. Valid for the lifetime of the handle.
 *
 * # Safety
 * `schmidt` must be null or a live handle.
 */
const char *biphoton_schmidt_warning(const struct BiphotonSchmidt *schmidt, size_t index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIPHOTON_H */
