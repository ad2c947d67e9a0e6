/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PIM_H
#define PIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PimStatus {
  PIM_STATUS_OK = 0,
  PIM_STATUS_NULL_POINTER = 1,
  PIM_STATUS_INVALID_ARGUMENT = 2,
  PIM_STATUS_IO = 3,
  PIM_STATUS_PARSE = 4,
  PIM_STATUS_UNSUPPORTED = 5,
  PIM_STATUS_WEIGHTS_REQUIRED = 6,
  PIM_STATUS_NOT_CONVERGED = 7,
  PIM_STATUS_NUMERICAL = 8,
  PIM_STATUS_PANIC = 9,
} PimStatus;

typedef enum PimKernel {
  PIM_KERNEL_GAUSSIAN = 0,
  PIM_KERNEL_COMPACT = 1,
} PimKernel;

typedef enum PimBoundary {
  PIM_BOUNDARY_NEUMANN = 0,
  PIM_BOUNDARY_DIRICHLET = 1,
} PimBoundary;

// A point cloud with optional quadrature weights.
typedef struct PimCloud PimCloud;

// Assembled `L`, `I` and `B` for one cloud and kernel.
typedef struct PimSystem PimSystem;

// Diagnostics of a linear solve. `multiplier` is NaN unless the mean-zero
// constraint was imposed.
typedef struct PimSolveInfo {
  size_t iterations;
  double relative_residual;
  double multiplier;
} PimSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, e.g. `"0.1.0"`. The string is static.
const char *pim_version(void);

// Message of the last failed call on this thread, or null after a success.
// Valid until the next `pim_*` call on the same thread.
const char *pim_last_error_message(void);

// Loads a `.pts` cloud or an `.off`/`.tet` mesh (whose vertices become the
// cloud, with mesh weights).
enum PimStatus pim_cloud_load(const char *path, struct PimCloud **out);

// Builds a cloud from `n` points of `ambient_dim` coordinates each
// (row-major) and `m` boundary point indices. The cloud has no weights.
enum PimStatus pim_cloud_from_points(size_t ambient_dim,
                                     size_t intrinsic_dim,
                                     const double *coords,
                                     size_t n,
                                     const size_t *boundary,
                                     size_t m,
                                     struct PimCloud **out);

// The vertices of the structured unit-disk mesh with `rings` rings, with
// mesh weights.
enum PimStatus pim_cloud_unit_disk(size_t rings, struct PimCloud **out);

// Number of points; 0 for a null handle.
size_t pim_cloud_len(const struct PimCloud *cloud);

// Number of boundary points; 0 for a null handle.
size_t pim_cloud_boundary_len(const struct PimCloud *cloud);

// Ambient dimension; 0 for a null handle.
size_t pim_cloud_ambient_dim(const struct PimCloud *cloud);

// Copies the coordinates (row-major, `len = n · ambient_dim`) into `out`.
enum PimStatus pim_cloud_coordinates(const struct PimCloud *cloud, double *out, size_t len);

// Copies the boundary point indices (`len = m`) into `out`.
enum PimStatus pim_cloud_boundary_indices(const struct PimCloud *cloud, size_t *out, size_t len);

// Copies the volume weights `V` (`n`) and boundary weights `A` (`m`).
// Either output may be null to skip it.
enum PimStatus pim_cloud_weights(const struct PimCloud *cloud,
                                 double *volume,
                                 size_t n,
                                 double *area,
                                 size_t m);

// Sets `V` (`n` values) and `A` (`m` values).
enum PimStatus pim_cloud_set_weights(struct PimCloud *cloud,
                                     const double *volume,
                                     size_t n,
                                     const double *area,
                                     size_t m);

// Estimates `V` and `A` from the points using `nn` neighbours and stores
// them on the cloud. Writes δ to `delta` when it is not null.
enum PimStatus pim_cloud_estimate_weights(struct PimCloud *cloud, size_t nn, double *delta);

// δ: mean over points of the mean distance to the `nn` nearest neighbours.
enum PimStatus pim_cloud_delta(const struct PimCloud *cloud, size_t nn, double *out);

void pim_cloud_free(struct PimCloud *cloud);

// Assembles the operators of a weighted cloud for kernel bandwidth `t` and
// normalizer `c_t` (pass 0 for `(4πt)^{-k/2}`).
enum PimStatus pim_system_assemble(const struct PimCloud *cloud,
                                   enum PimKernel kernel,
                                   double t,
                                   double c_t,
                                   struct PimSystem **out);

// Number of points; 0 for a null handle.
size_t pim_system_n(const struct PimSystem *system);

// Number of boundary points; 0 for a null handle.
size_t pim_system_m(const struct PimSystem *system);

void pim_system_free(struct PimSystem *system);

// Solves the Neumann problem `-Δu = f`, `∂u/∂n = g` with `Σ V u = 0`.
// `f` and `u` have `n` entries, `g` has `m`. `tol <= 0` uses the default.
// `info` may be null.
enum PimStatus pim_solve_neumann(const struct PimSystem *system,
                                 const double *f,
                                 size_t n,
                                 const double *g,
                                 size_t m,
                                 double tol,
                                 double *u,
                                 struct PimSolveInfo *info);

// Solves the Dirichlet problem `u = g` on the boundary through the Robin
// penalty with parameter `beta`.
enum PimStatus pim_solve_dirichlet(const struct PimSystem *system,
                                   const double *f,
                                   size_t n,
                                   const double *g,
                                   size_t m,
                                   double beta,
                                   double tol,
                                   double *u,
                                   struct PimSolveInfo *info);

// Dirichlet problem by the augmented Lagrangian iteration: at most
// `max_iter` penalty solves, stopping once the relative boundary residual
// falls below `alm_tol`. Writes the iteration count to `alm_iterations`
// when it is not null.
enum PimStatus pim_solve_dirichlet_alm(const struct PimSystem *system,
                                       const double *f,
                                       size_t n,
                                       const double *g,
                                       size_t m,
                                       double beta,
                                       size_t max_iter,
                                       double alm_tol,
                                       double tol,
                                       double *u,
                                       size_t *alm_iterations,
                                       struct PimSolveInfo *info);

// The `count` smallest eigenvalues of `-Δ` with the given boundary condition
// (`beta` is used for Dirichlet only), ascending. When `vectors` is not null
// it receives `count · n` values: eigenvector `k` occupies
// `vectors[k·n .. (k+1)·n]`, normalized to `Σ v² V = 1`.
enum PimStatus pim_eigen(const struct PimSystem *system,
                         enum PimBoundary boundary,
                         size_t count,
                         double beta,
                         double *values,
                         double *vectors);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIM_H */
