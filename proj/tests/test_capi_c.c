/* Compiles the public header as C and exercises a handle round trip. */
#include "hairgs/hairgs.h"

#include <stdio.h>

int main(void) {
  hgs_groom* groom = NULL;
  size_t strands = 0, points = 0;
  double xyz[3 * 8 * 4];

  if (hgs_groom_make_synthetic("wavy", 8, 4, 3, &groom) != HGS_OK) {
    fprintf(stderr, "make_synthetic: %s\n", hgs_last_error());
    return 1;
  }
  if (hgs_groom_counts(groom, &strands, &points) != HGS_OK || strands != 8 || points != 4) return 1;
  if (hgs_groom_points(groom, xyz, sizeof xyz / sizeof xyz[0]) != HGS_OK) return 1;
  if (hgs_groom_points(groom, xyz, 5) != HGS_ERR_INVALID_INPUT) return 1;
  hgs_groom_destroy(groom);
  puts("ok");
  return 0;
}
