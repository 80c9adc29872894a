#ifndef AUCTIONFDA_H
#define AUCTIONFDA_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which transform of the bid path is smoothed.
 */
typedef enum AfdaResponse {
  /**
   * Log price divided by the final log price.
   */
  AFDA_RESPONSE_FRACTION = 0,
  AFDA_RESPONSE_LOG_PRICE = 1,
} AfdaResponse;

/**
 * Result code returned by every fallible entry point.
 */
typedef enum AfdaStatus {
  AFDA_STATUS_OK = 0,
  AFDA_STATUS_NULL_POINTER = 1,
  AFDA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input files could not be parsed or failed validation.
   */
  AFDA_STATUS_INVALID_INPUT = 3,
  AFDA_STATUS_IO = 4,
  /**
   * A fit or regression could not be computed.
   */
  AFDA_STATUS_NUMERICAL = 5,
  AFDA_STATUS_INDEX_OUT_OF_RANGE = 6,
  AFDA_STATUS_BUFFER_TOO_SMALL = 7,
  AFDA_STATUS_PANIC = 8,
} AfdaStatus;

/**
 * A fitted curve or one of its derivatives.
 */
typedef enum AfdaComponent {
  AFDA_COMPONENT_LEVEL = 0,
  AFDA_COMPONENT_VELOCITY = 1,
  AFDA_COMPONENT_ACCELERATION = 2,
} AfdaComponent;

/**
 * A row of a coefficient curve table.
 */
typedef enum AfdaBandField {
  AFDA_BAND_FIELD_BETA = 0,
  AFDA_BAND_FIELD_STD_ERROR = 1,
  AFDA_BAND_FIELD_LOWER = 2,
  AFDA_BAND_FIELD_UPPER = 3,
} AfdaBandField;

/**
 * Smoothed curves of the lots that could be fitted, in catalog order.
 */
typedef struct AfdaCurves AfdaCurves;

/**
 * Lot catalog plus bid histories.
 */
typedef struct AfdaDataset AfdaDataset;

/**
 * Coefficient curves with pointwise confidence bands.
 */
typedef struct AfdaRegression AfdaRegression;

/**
 * Smoothing settings. Start from `afda_options_default`.
 */
typedef struct AfdaOptions {
  size_t grid_points;
  size_t degree;
  size_t n_knots;
  size_t penalty_order;
  double lambda;
  enum AfdaResponse response;
  bool monotone;
  /**
   * Use `ln(1 + x)` for the prior price covariate instead of `ln(x)`.
   */
  bool prev_price_log1p;
} AfdaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *afda_version(void);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *afda_last_error(void);

/**
 * Defaults: 100 grid points, degree 4, 10 knots, penalty order 2,
 * lambda 0.1, fraction-of-final response.
 */
struct AfdaOptions afda_options_default(void);

/**
 * Reads `lots.csv` and `bids.csv`. Paths are nul-terminated UTF-8.
 */
enum AfdaStatus afda_dataset_load(const char *lots_path,
                                  const char *bids_path,
                                  struct AfdaDataset **out);

/**
 * Generates `n_lots` synthetic auctions from the default truth with the
 * given seed.
 */
enum AfdaStatus afda_dataset_simulate(uint64_t seed, size_t n_lots, struct AfdaDataset **out);

/**
 * Number of catalog lots, or 0 for a null handle.
 */
size_t afda_dataset_lot_count(const struct AfdaDataset *ds);

void afda_dataset_free(struct AfdaDataset *ds);

/**
 * Smooths every lot with bids. `options` may be null for the defaults.
 * Lots that cannot be fitted are counted in
 * `afda_curves_failure_count` rather than failing the call.
 */
enum AfdaStatus afda_smooth(const struct AfdaDataset *ds,
                            const struct AfdaOptions *options,
                            struct AfdaCurves **out);

size_t afda_curves_count(const struct AfdaCurves *c);

size_t afda_curves_grid_len(const struct AfdaCurves *c);

/**
 * Lots whose bids could not be smoothed.
 */
size_t afda_curves_failure_count(const struct AfdaCurves *c);

/**
 * Catalog lots without any bids.
 */
size_t afda_curves_skipped_count(const struct AfdaCurves *c);

/**
 * Lot id of curve `index`, owned by the handle. Null when out of range.
 */
const char *afda_curves_lot_id(const struct AfdaCurves *c, size_t index);

/**
 * Copies one component of curve `index` on the grid into `buf`, which must
 * hold at least `afda_curves_grid_len` values.
 */
enum AfdaStatus afda_curves_copy(const struct AfdaCurves *c,
                                 size_t index,
                                 enum AfdaComponent component,
                                 double *buf,
                                 size_t len);

void afda_curves_free(struct AfdaCurves *c);

/**
 * Regresses one curve component on the lot covariates at every grid point
 * with `1 - alpha` pointwise bands.
 */
enum AfdaStatus afda_regress(const struct AfdaDataset *ds,
                             const struct AfdaCurves *curves,
                             enum AfdaComponent component,
                             double alpha,
                             struct AfdaRegression **out);

/**
 * Number of coefficient curves, one per regression column.
 */
size_t afda_regression_covariate_count(const struct AfdaRegression *r);

/**
 * Lots that entered the regression.
 */
size_t afda_regression_n_lots(const struct AfdaRegression *r);

/**
 * Column name of coefficient curve `index`, owned by the handle.
 */
const char *afda_regression_covariate_name(const struct AfdaRegression *r, size_t index);

/**
 * Copies one field of coefficient curve `index` into `buf`. Grid points
 * where the column was dropped hold NaN.
 */
enum AfdaStatus afda_regression_copy(const struct AfdaRegression *r,
                                     size_t index,
                                     enum AfdaBandField field,
                                     double *buf,
                                     size_t len);

void afda_regression_free(struct AfdaRegression *r);

/**
 * Fits a penalized spline to `n` samples on the uniform grid of `n`
 * points in [0, 1] and writes the fitted values and first two derivatives.
 * `options` may be null; its grid size and response fields are ignored.
 * Any of the three output buffers may be null to skip it.
 */
enum AfdaStatus afda_spline_smooth(const double *y,
                                   size_t n,
                                   const struct AfdaOptions *options,
                                   double *values,
                                   double *velocity,
                                   double *acceleration);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUCTIONFDA_H */
