#include <math.h>
#include <stdio.h>
#include <string.h>

#include "auctionfda.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      const char *e = afda_last_error();                              \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,          \
              e ? e : "no error");                                    \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  AfdaDataset *ds = NULL;
  AfdaCurves *curves = NULL;
  AfdaRegression *reg = NULL;
  AfdaOptions opts = afda_options_default();
  double beta[100], lo[100], hi[100];
  size_t i, j, n;

  CHECK(strlen(afda_version()) > 0);
  CHECK(afda_dataset_simulate(42, 107, &ds) == AFDA_STATUS_OK);
  CHECK(afda_dataset_lot_count(ds) == 107);
  CHECK(afda_smooth(ds, &opts, &curves) == AFDA_STATUS_OK);
  CHECK(afda_curves_count(curves) == 107);
  CHECK(afda_regress(ds, curves, AFDA_COMPONENT_LEVEL, 0.05, &reg) == AFDA_STATUS_OK);

  n = afda_regression_covariate_count(reg);
  CHECK(n == 9);
  for (j = 0; j < n; j++) {
    CHECK(afda_regression_copy(reg, j, AFDA_BAND_FIELD_BETA, beta, 100) == AFDA_STATUS_OK);
    CHECK(afda_regression_copy(reg, j, AFDA_BAND_FIELD_LOWER, lo, 100) == AFDA_STATUS_OK);
    CHECK(afda_regression_copy(reg, j, AFDA_BAND_FIELD_UPPER, hi, 100) == AFDA_STATUS_OK);
    for (i = 0; i < 100; i++) {
      if (isnan(beta[i])) continue;
      CHECK(lo[i] <= beta[i] && beta[i] <= hi[i]);
    }
  }
  CHECK(afda_regression_copy(reg, 9, AFDA_BAND_FIELD_BETA, beta, 100) ==
        AFDA_STATUS_INDEX_OUT_OF_RANGE);
  CHECK(afda_last_error() != NULL);

  printf("%s %zu\n", afda_regression_covariate_name(reg, 8), afda_regression_n_lots(reg));

  afda_regression_free(reg);
  afda_curves_free(curves);
  afda_dataset_free(ds);
  return 0;
}
