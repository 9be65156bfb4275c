#ifndef MICROLOCAL_H
#define MICROLOCAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlStatus {
  ML_STATUS_OK = 0,
  ML_STATUS_NULL_POINTER = 1,
  ML_STATUS_INVALID_ARGUMENT = 2,
  // Numerical failure: starvation, too few shells, no convergence.
  ML_STATUS_COMPUTATION = 3,
  ML_STATUS_IO = 4,
  ML_STATUS_PANIC = 5,
} MlStatus;

// Per-direction verdicts as reported by [`ml_report_verdict`].
typedef enum MlVerdict {
  ML_VERDICT_REGULAR = 0,
  ML_VERDICT_SINGULAR = 1,
  ML_VERDICT_INCONCLUSIVE = 2,
} MlVerdict;

// Fourier coefficients on a box `|n_j| <= n_max`.
typedef struct MlCoeffs MlCoeffs;

// A function or distribution to analyze.
typedef struct MlInput MlInput;

// Outcome of a wave front or Sobolev scan at one point.
typedef struct MlReport MlReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *ml_last_error(void);

// Library version as a static NUL-terminated string.
const char *ml_version(void);

// Input from samples on the uniform grid with `m` points per axis, row-major
// with axis 0 slowest. `im` may be null for real data.
//
// # Safety
// `re` (and `im` when non-null) must point to `m^dim` doubles.
enum MlStatus ml_input_from_samples(size_t dim,
                                    size_t m,
                                    const double *re,
                                    const double *im,
                                    struct MlInput **out);

// Input from an oracle description such as `halfplane_edge@0.5,0.5;normal=1,0`.
//
// # Safety
// `spec` must be a NUL-terminated string.
enum MlStatus ml_input_from_oracle(const char *spec, struct MlInput **out);

// # Safety
// `input` must be null or a handle from `ml_input_*` not yet freed.
void ml_input_free(struct MlInput *input);

// Coefficients of the periodic field given by samples, truncated to `n_max`.
//
// # Safety
// As for [`ml_input_from_samples`].
enum MlStatus ml_coeffs_from_samples(size_t dim,
                                     size_t m,
                                     const double *re,
                                     const double *im,
                                     size_t n_max,
                                     struct MlCoeffs **out);

// Coefficients of the localized periodization of `input` with the plateau
// window of half-widths `eps_in < eps_out` centred at `x0`.
//
// # Safety
// `input` must be a live handle and `x0` must point to `dim` doubles, where
// `dim` is the input dimension.
enum MlStatus ml_coeffs_localized(const struct MlInput *input,
                                  const double *x0,
                                  double eps_in,
                                  double eps_out,
                                  size_t n_max,
                                  struct MlCoeffs **out);

// Coefficients of the product, by convolution, on the box `n_out`.
//
// # Safety
// `a` and `b` must be live handles.
enum MlStatus ml_coeffs_product(const struct MlCoeffs *a,
                                const struct MlCoeffs *b,
                                size_t n_out,
                                struct MlCoeffs **out);

// # Safety
// `c` must be a live handle.
size_t ml_coeffs_dim(const struct MlCoeffs *c);

// # Safety
// `c` must be a live handle.
size_t ml_coeffs_n_max(const struct MlCoeffs *c);

// Coefficient at the multi-index `n` (`dim` entries); zero outside the box.
//
// # Safety
// `c` must be a live handle, `n` must point to `dim` integers, `re` and `im`
// must be writable.
enum MlStatus ml_coeffs_get(const struct MlCoeffs *c, const int64_t *n, double *re, double *im);

// Weighted norm with weight `poly:S`, `exp:R` or `one` and exponent `q`
// (`INFINITY` for the sup norm).
//
// # Safety
// `c` must be a live handle, `weight` NUL-terminated, `out` writable.
enum MlStatus ml_coeffs_norm(const struct MlCoeffs *c, const char *weight, double q, double *out);

// # Safety
// `c` must be null or a live handle.
void ml_coeffs_free(struct MlCoeffs *c);

// Wave front scan at `x0` over the default direction grid: a direction is
// singular when its decay order falls below `threshold`.
//
// # Safety
// As for [`ml_coeffs_localized`].
enum MlStatus ml_wavefront_scan(const struct MlInput *input,
                                const double *x0,
                                double eps_in,
                                double eps_out,
                                size_t n_max,
                                double threshold,
                                struct MlReport **out);

// Sobolev wave front scan of order `s` at `x0`.
//
// # Safety
// As for [`ml_coeffs_localized`].
enum MlStatus ml_sobolev_scan(const struct MlInput *input,
                              const double *x0,
                              double eps_in,
                              double eps_out,
                              size_t n_max,
                              double s,
                              struct MlReport **out);

// Number of directions in the scan grid.
//
// # Safety
// `r` must be a live handle.
size_t ml_report_directions(const struct MlReport *r);

// Axis of direction `i`, written to `axis[0..dim]`.
//
// # Safety
// `r` must be a live handle and `axis` must have room for the dimension.
enum MlStatus ml_report_axis(const struct MlReport *r, size_t i, double *axis);

// Verdict for direction `i`.
//
// # Safety
// `r` must be a live handle and `out` writable.
enum MlStatus ml_report_verdict(const struct MlReport *r, size_t i, enum MlVerdict *out);

// Number of singular directions.
//
// # Safety
// `r` must be a live handle.
size_t ml_report_singular_count(const struct MlReport *r);

// The report as JSON. Release with [`ml_string_free`].
//
// # Safety
// `r` must be a live handle and `out` writable.
enum MlStatus ml_report_json(const struct MlReport *r, char **out);

// # Safety
// `r` must be null or a live handle.
void ml_report_free(struct MlReport *r);

// # Safety
// `s` must be null or a string returned by this library.
void ml_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MICROLOCAL_H */
