#ifndef CSTRAJ_H
#define CSTRAJ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CstrajStatus {
  CSTRAJ_STATUS_OK = 0,
  CSTRAJ_STATUS_NULL_POINTER = 1,
  CSTRAJ_STATUS_INVALID_ARGUMENT = 2,
  CSTRAJ_STATUS_NO_CONVERGENCE = 3,
  CSTRAJ_STATUS_NON_FINITE = 4,
  CSTRAJ_STATUS_CAUSTIC = 5,
  CSTRAJ_STATUS_DISCONTINUITY = 6,
  CSTRAJ_STATUS_EIGEN_FAILURE = 7,
  CSTRAJ_STATUS_WIDTH_MISMATCH = 8,
  CSTRAJ_STATUS_OUT_OF_RANGE = 9,
  CSTRAJ_STATUS_PANIC = 10,
} CstrajStatus;

// Model parameters `ħ, b, λ, β`.
typedef struct CstrajModel CstrajModel;

// Spectrum of the model Hamiltonian in an oscillator basis.
typedef struct CstrajOracle CstrajOracle;

// Completed part of a propagation sweep.
typedef struct CstrajSweep CstrajSweep;

typedef struct CstrajShootingConfig {
  double delta;
  double eps0;
  double eps_scale;
  double fd_step;
  size_t max_iters;
  size_t n_steps;
  double label_step;
} CstrajShootingConfig;

// Coherent-state labels `(q', p')` and `(q'', p'')`.
typedef struct CstrajLabels {
  double q_i;
  double p_i;
  double q_f;
  double p_f;
} CstrajLabels;

typedef struct CstrajRoot {
  double x1_0;
  double p1_0;
  double distance;
  size_t iters;
} CstrajRoot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *cstraj_last_error_message(void);

struct CstrajShootingConfig cstraj_shooting_config_default(void);

// # Safety
// `out` must be NULL or point to writable storage for one handle.
enum CstrajStatus cstraj_model_new(double hbar,
                                   double b,
                                   double lambda,
                                   double beta,
                                   struct CstrajModel **out);

// # Safety
// `model` must be NULL or a handle from [`cstraj_model_new`] not yet freed.
void cstraj_model_free(struct CstrajModel *model);

// Momentum width `c = ħ/b` of a model.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum CstrajStatus cstraj_model_c(const struct CstrajModel *model, double *out);

// Complex root for the labels at time `t`, searched from `(guess_x1, guess_p1)`.
//
// # Safety
// Pointers must be live and properly aligned; `config` may be NULL for
// defaults.
enum CstrajStatus cstraj_find_root(const struct CstrajModel *model,
                                   const struct CstrajLabels *labels,
                                   double t,
                                   const struct CstrajShootingConfig *config,
                                   double guess_x1,
                                   double guess_p1,
                                   struct CstrajRoot *out);

// Semiclassical propagator on `n_t` evenly spaced times over `[0, t_max]`.
// A sweep that stops early still yields a handle holding the completed
// points; see [`cstraj_sweep_truncated`].
//
// # Safety
// Pointers must be live; `config` may be NULL for defaults.
enum CstrajStatus cstraj_propagate(const struct CstrajModel *model,
                                   const struct CstrajLabels *labels,
                                   double t_max,
                                   size_t n_t,
                                   const struct CstrajShootingConfig *config,
                                   struct CstrajSweep **out);

// Number of completed points, or 0 for NULL.
//
// # Safety
// `sweep` must be NULL or a live handle.
size_t cstraj_sweep_len(const struct CstrajSweep *sweep);

// 1 when the sweep stopped before its last time, 0 otherwise (or for NULL).
//
// # Safety
// `sweep` must be NULL or a live handle.
int32_t cstraj_sweep_truncated(const struct CstrajSweep *sweep);

// # Safety
// `sweep` must be a live handle and the outputs writable.
enum CstrajStatus cstraj_sweep_get(const struct CstrajSweep *sweep,
                                   size_t index,
                                   double *t,
                                   double *re,
                                   double *im);

// # Safety
// `sweep` must be NULL or a handle from [`cstraj_propagate`] not yet freed.
void cstraj_sweep_free(struct CstrajSweep *sweep);

// Diagonalizes the model Hamiltonian in `basis_size` oscillator states.
//
// # Safety
// `model` must be live and `out` writable.
enum CstrajStatus cstraj_oracle_new(const struct CstrajModel *model,
                                    size_t basis_size,
                                    struct CstrajOracle **out);

// Energy of eigenstate `level` (ascending order).
//
// # Safety
// `oracle` must be live and `out` writable.
enum CstrajStatus cstraj_oracle_energy(const struct CstrajOracle *oracle,
                                       size_t level,
                                       double *out);

// Exact propagator at time `t` from the lowest `n_levels` eigenstates.
//
// # Safety
// Pointers must be live and the outputs writable.
enum CstrajStatus cstraj_oracle_csp(const struct CstrajOracle *oracle,
                                    const struct CstrajLabels *labels,
                                    double t,
                                    size_t n_levels,
                                    double *re,
                                    double *im);

// # Safety
// `oracle` must be NULL or a handle from [`cstraj_oracle_new`] not yet freed.
void cstraj_oracle_free(struct CstrajOracle *oracle);

// Closed-form harmonic propagator; requires `β = 0` and `b = √(ħ/√λ)`.
//
// # Safety
// Pointers must be live and the outputs writable.
enum CstrajStatus cstraj_harmonic_closed_form(const struct CstrajModel *model,
                                              const struct CstrajLabels *labels,
                                              double t,
                                              double *re,
                                              double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSTRAJ_H */
