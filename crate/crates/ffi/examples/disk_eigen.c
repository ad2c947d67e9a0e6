/* Smallest Neumann eigenvalues of the unit disk through the C interface.
 *
 *   cargo build -p pim-ffi --release
 *   cc examples/disk_eigen.c -Iinclude ../../target/release/libpim_ffi.a -lm -lpthread -ldl -o disk_eigen
 */
#include <math.h>
#include <stdio.h>

#include "pim.h"

static int check(PimStatus status) {
    if (status != PIM_STATUS_OK) {
        fprintf(stderr, "pim error %d: %s\n", (int)status, pim_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    PimCloud *cloud = NULL;
    PimSystem *system = NULL;
    double delta = 0.0;
    double values[4];
    int rc = 1;

    if (check(pim_cloud_unit_disk(15, &cloud))) goto done;
    if (check(pim_cloud_delta(cloud, 10, &delta))) goto done;
    if (check(pim_system_assemble(cloud, PIM_KERNEL_GAUSSIAN, pow(0.5 * delta, 2), 1.0, &system))) goto done;
    if (check(pim_eigen(system, PIM_BOUNDARY_NEUMANN, 4, 0.0, values, NULL))) goto done;

    printf("pim %s, n = %zu\n", pim_version(), pim_system_n(system));
    for (int k = 0; k < 4; k++) printf("gamma_%d = %.6f\n", k, values[k]);
    rc = 0;
done:
    pim_system_free(system);
    pim_cloud_free(cloud);
    return rc;
}
