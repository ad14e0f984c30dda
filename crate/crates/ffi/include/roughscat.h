#ifndef ROUGHSCAT_H
#define ROUGHSCAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RscStatus {
  RSC_STATUS_OK = 0,
  RSC_STATUS_NULL_POINTER = 1,
  RSC_STATUS_INVALID_UTF8 = 2,
  RSC_STATUS_CONFIG = 3,
  RSC_STATUS_INVALID_INPUT = 4,
  RSC_STATUS_DIMENSION = 5,
  RSC_STATUS_NUMERICAL = 6,
  RSC_STATUS_IO = 7,
  RSC_STATUS_OUT_OF_RANGE = 8,
  RSC_STATUS_BUFFER_TOO_SMALL = 9,
  RSC_STATUS_PANIC = 10,
} RscStatus;

/**
 * Far-field measurements.
 */
typedef struct RscDataset RscDataset;

/**
 * Validated experiment configuration.
 */
typedef struct RscExperiment RscExperiment;

/**
 * Noise-free far fields for every `(k, direction)` pair of an experiment.
 */
typedef struct RscFarField RscFarField;

/**
 * Outcome of an inversion.
 */
typedef struct RscReconstruction RscReconstruction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rsc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rsc_version(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void rsc_string_free(char *s);

/**
 * Parses and validates a JSON experiment config.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RscStatus rsc_experiment_from_json(const char *json, struct RscExperiment **out);

/**
 * # Safety
 * `exp` must come from [`rsc_experiment_from_json`] or be null.
 */
void rsc_experiment_free(struct RscExperiment *exp);

/**
 * Writes the 64-character hex config hash and a NUL into `buf` (at least 65 bytes).
 *
 * # Safety
 * `buf` must hold `len` bytes.
 */
enum RscStatus rsc_experiment_hash(const struct RscExperiment *exp, char *buf, size_t len);

/**
 * Overrides the noise seed.
 *
 * # Safety
 * `exp` must be a valid handle.
 */
enum RscStatus rsc_experiment_set_seed(struct RscExperiment *exp, uint64_t seed);

/**
 * Solves the forward problem for the configured true profile.
 *
 * # Safety
 * `exp` must be a valid handle and `out` a valid pointer.
 */
enum RscStatus rsc_forward(const struct RscExperiment *exp, struct RscFarField **out);

/**
 * # Safety
 * `ff` must come from [`rsc_forward`] or be null.
 */
void rsc_farfield_free(struct RscFarField *ff);

/**
 * Number of `(k, direction)` blocks, ordered wavenumber-major.
 *
 * # Safety
 * `ff` must be a valid handle or null.
 */
size_t rsc_farfield_block_count(const struct RscFarField *ff);

/**
 * Wavenumber, incidence angle and sample count of one block.
 *
 * # Safety
 * All pointers must be valid.
 */
enum RscStatus rsc_farfield_block_info(const struct RscFarField *ff,
                                       size_t index,
                                       double *k,
                                       double *theta,
                                       size_t *n_angles);

/**
 * Copies observation angles and far-field values of one block; each buffer
 * holds `len` doubles, which must equal the block's sample count.
 *
 * # Safety
 * The buffers must hold `len` doubles each.
 */
enum RscStatus rsc_farfield_block_values(const struct RscFarField *ff,
                                         size_t index,
                                         double *angles,
                                         double *re,
                                         double *im,
                                         size_t len);

/**
 * Synthesizes noisy measurements for the configured true profile.
 *
 * # Safety
 * `exp` must be a valid handle and `out` a valid pointer.
 */
enum RscStatus rsc_synthesize(const struct RscExperiment *exp, struct RscDataset **out);

/**
 * Parses a measurement set in its JSON form.
 *
 * # Safety
 * `json` must be NUL-terminated and `out` valid.
 */
enum RscStatus rsc_dataset_from_json(const char *json, struct RscDataset **out);

/**
 * JSON form of a measurement set; release with [`rsc_string_free`].
 *
 * # Safety
 * `ds` must be a valid handle and `out` valid.
 */
enum RscStatus rsc_dataset_to_json(const struct RscDataset *ds, char **out);

/**
 * # Safety
 * `ds` must come from this library or be null.
 */
void rsc_dataset_free(struct RscDataset *ds);

/**
 * Reconstructs spline coefficients from `ds` with the settings of `exp`.
 *
 * # Safety
 * Handles must be valid and `out` a valid pointer.
 */
enum RscStatus rsc_invert(const struct RscExperiment *exp,
                          const struct RscDataset *ds,
                          struct RscReconstruction **out);

/**
 * # Safety
 * `rec` must come from [`rsc_invert`] or be null.
 */
void rsc_reconstruction_free(struct RscReconstruction *rec);

/**
 * Copies the final coefficients. `needed` receives the coefficient count;
 * with `buf` null only the count is reported.
 *
 * # Safety
 * `buf` must hold `len` doubles or be null.
 */
enum RscStatus rsc_reconstruction_coefficients(const struct RscReconstruction *rec,
                                               double *buf,
                                               size_t len,
                                               size_t *needed);

/**
 * # Safety
 * `rec` must be a valid handle or null.
 */
size_t rsc_reconstruction_stage_count(const struct RscReconstruction *rec);

/**
 * Wavenumber, iterations, final `Err_k` (NaN if the stage was skipped) and
 * convergence flag of one stage.
 *
 * # Safety
 * All pointers must be valid.
 */
enum RscStatus rsc_reconstruction_stage(const struct RscReconstruction *rec,
                                        size_t index,
                                        double *k,
                                        size_t *iterations,
                                        double *final_err,
                                        int *converged);

/**
 * One regularized Gauss-Newton step for a complex `rows x cols` system given
 * row-major real and imaginary parts. Writes `cols` step entries, the chosen
 * `beta` and whether the discrepancy level was unattainable.
 *
 * # Safety
 * Input buffers must hold `rows * cols` (matrix) or `rows` (residual)
 * doubles; `delta_a` must hold `cols` doubles.
 */
enum RscStatus rsc_lm_step(size_t rows,
                           size_t cols,
                           const double *j_re,
                           const double *j_im,
                           const double *r_re,
                           const double *r_im,
                           double rho,
                           double *delta_a,
                           double *beta,
                           int *unattainable);

/**
 * Observation angles `j pi / n_f`, `j = 0..=n_f`, into `buf` (`n_f + 1` doubles).
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum RscStatus rsc_observation_angles(size_t n_f, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROUGHSCAT_H */
