#include <math.h>
#include <stdio.h>
#include <string.h>

#include "mslab.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "line %d: %s\n", __LINE__, #cond);              \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  MslabKernel *k = NULL;
  MslabFunction *u = NULL;
  double v = 0.0;
  MslabEnergySplit split;

  CHECK(mslab_kernel_new("fractional", 1, 2.0, NAN, &k) == MSLAB_STATUS_OK);
  CHECK(mslab_tail_mass(k, 0.1, 2.0, &v) == MSLAB_STATUS_OK);
  CHECK(fabs(v - 0.870550563296124) < 1e-14);

  CHECK(mslab_function_new("bump", 1, &u) == MSLAB_STATUS_OK);
  CHECK(mslab_energy_split(k, u, 0.1, 2.0, 0.5, &split) == MSLAB_STATUS_OK);
  CHECK(fabs(split.far + split.near - split.total) <= split.error_estimate);

  CHECK(mslab_short_range_moment(k, 0.1, 1.0, 0.1, &v) == MSLAB_STATUS_DIVERGENT);
  CHECK(mslab_last_error() != NULL);
  CHECK(strcmp(mslab_status_name(MSLAB_STATUS_DIVERGENT), "divergent integral") == 0);

  mslab_function_free(u);
  mslab_kernel_free(k);
  printf("ok %s\n", mslab_version());
  return 0;
}
