#ifndef UCPLAB_H
#define UCPLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum UcplabStatus {
  UCPLAB_STATUS_OK = 0,
  UCPLAB_STATUS_NULL_POINTER = 1,
  UCPLAB_STATUS_INVALID_ARGUMENT = 2,
  UCPLAB_STATUS_NUMERICAL = 3,
  UCPLAB_STATUS_IO = 4,
  UCPLAB_STATUS_CONFIG = 5,
  UCPLAB_STATUS_PANIC = 6,
} UcplabStatus;

typedef enum UcplabBoundary {
  UCPLAB_BOUNDARY_DIRICHLET = 0,
  UCPLAB_BOUNDARY_NEUMANN = 1,
} UcplabBoundary;

typedef enum UcplabBranch {
  UCPLAB_BRANCH_AUTO = 0,
  UCPLAB_BRANCH_FIRST = 1,
  UCPLAB_BRANCH_SECOND = 2,
} UcplabBranch;

typedef struct UcplabGrid UcplabGrid;

typedef struct UcplabMask UcplabMask;

typedef struct UcplabSpectrum UcplabSpectrum;

// Inputs of the observability constant.
typedef struct UcplabObsParams {
  double t;
  double g;
  double delta;
  double v_sup;
  double v_shift_sup;
  double kappa;
  double c1;
  double c2;
  double c3;
} UcplabObsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *ucplab_last_error(void);

// Library version as a static NUL-terminated string.
const char *ucplab_version(void);

// Box `Π (lower[i], upper[i])` with `points[i]` interior nodes per axis;
// `bc` is a [`UcplabBoundary`] value.
//
// # Safety
// `lower`, `upper` and `points` must hold `dim` elements; `out` must be
// writable.
enum UcplabStatus ucplab_grid_new(uintptr_t dim,
                                  const double *lower,
                                  const double *upper,
                                  const uintptr_t *points,
                                  uint32_t bc,
                                  struct UcplabGrid **out_grid);

// # Safety
// `grid` must be NULL or a handle from [`ucplab_grid_new`] not yet freed.
void ucplab_grid_free(struct UcplabGrid *grid);

// # Safety
// `grid` must be a live handle and `len` writable.
enum UcplabStatus ucplab_grid_len(const struct UcplabGrid *grid, uintptr_t *len);

// Eigendecomposition of `-Δ + V` with nodal potential values `v`
// (`ucplab_grid_len` entries, last axis fastest).
//
// # Safety
// `grid` must be live, `v` must hold `len` values and `out_spectrum` must
// be writable.
enum UcplabStatus ucplab_spectrum_new(const struct UcplabGrid *grid,
                                      const double *v,
                                      uintptr_t len,
                                      struct UcplabSpectrum **out_spectrum);

// # Safety
// `spectrum` must be NULL or a live handle.
void ucplab_spectrum_free(struct UcplabSpectrum *spectrum);

// # Safety
// `spectrum` must be live and `len` writable.
enum UcplabStatus ucplab_spectrum_len(const struct UcplabSpectrum *spectrum, uintptr_t *len);

// Copy up to `cap` ascending eigenvalues into `buf`; `written` receives the
// number copied.
//
// # Safety
// `buf` must have room for `cap` doubles.
enum UcplabStatus ucplab_spectrum_eigenvalues(const struct UcplabSpectrum *spectrum,
                                              double *buf,
                                              uintptr_t cap,
                                              uintptr_t *written);

// Copy eigenvector `index` (grid coordinates, unit h-norm) into `buf`,
// which must hold `ucplab_grid_len` doubles.
//
// # Safety
// `buf` must have room for `len` doubles.
enum UcplabStatus ucplab_spectrum_eigenvector(const struct UcplabSpectrum *spectrum,
                                              uintptr_t index,
                                              double *buf,
                                              uintptr_t len);

// Mask of the `δ`-balls around the centres of the `G`-cells.
//
// # Safety
// `grid` must be live and `out_mask` writable.
enum UcplabStatus ucplab_mask_centers(const struct UcplabGrid *grid,
                                      double g,
                                      double delta,
                                      struct UcplabMask **out_mask);

// Mask of `δ`-balls around one seeded random point per `G`-cell.
//
// # Safety
// `grid` must be live and `out_mask` writable.
enum UcplabStatus ucplab_mask_sampled(const struct UcplabGrid *grid,
                                      double g,
                                      double delta,
                                      uint64_t seed,
                                      struct UcplabMask **out_mask);

// # Safety
// `mask` must be NULL or a live handle.
void ucplab_mask_free(struct UcplabMask *mask);

// # Safety
// `mask` must be live and `fraction` writable.
enum UcplabStatus ucplab_mask_covered_fraction(const struct UcplabMask *mask, double *fraction);

// `C_uc` for a potential with range `[v_min, v_max]`; `lambda_star`
// may be NULL.
//
// # Safety
// `cuc` must be writable; `lambda_star` must be NULL or writable.
enum UcplabStatus ucplab_eval_cuc(double v_min,
                                  double v_max,
                                  double energy,
                                  double g,
                                  double delta,
                                  double n_const,
                                  double *cuc,
                                  double *lambda_star);

// Minimal observed-mass ratio over the spectral subspace below `energy`.
//
// # Safety
// Handles must be live and `ratio` writable.
enum UcplabStatus ucplab_min_subspace_ratio(const struct UcplabSpectrum *spectrum,
                                            const struct UcplabMask *mask,
                                            double energy,
                                            double *ratio);

// # Safety
// `params` must be readable and `c_obs` writable.
enum UcplabStatus ucplab_eval_cobs(const struct UcplabObsParams *params,
                                   uint32_t branch,
                                   double *c_obs);

// # Safety
// `bound` must be writable.
enum UcplabStatus ucplab_wegner_bound(double e0,
                                      double epsilon,
                                      double l,
                                      uintptr_t dim,
                                      double n_const,
                                      double c_const,
                                      double nu_sup,
                                      double *bound);

// Measured observability constant at horizon `t`; `singular` may be NULL.
//
// # Safety
// Handles must be live and `c_meas` writable.
enum UcplabStatus ucplab_measure_observability(const struct UcplabSpectrum *spectrum,
                                               const struct UcplabMask *mask,
                                               double t,
                                               double *c_meas,
                                               bool *singular);

// Run a JSON-configured experiment of `kind` into `out_dir`. `seed` is
// used only when `has_seed` is true.
//
// # Safety
// String arguments must be NUL-terminated; `findings` must be NULL or
// writable.
enum UcplabStatus ucplab_run_scenario(const char *kind,
                                      const char *config_json,
                                      bool has_seed,
                                      uint64_t seed,
                                      const char *out_dir,
                                      bool force,
                                      uintptr_t *findings);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UCPLAB_H */
