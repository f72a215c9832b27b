/* C interface to the qlanczos spectral toolkit. */

#ifndef QLANCZOS_H
#define QLANCZOS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a C API call.
 */
enum QlStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Success.
   */
  QL_STATUS_OK = 0,
  /**
   * A required pointer argument was null or a buffer was too small.
   */
  QL_STATUS_NULL_ARGUMENT = 1,
  /**
   * Invalid configuration, parameter, or state specification.
   */
  QL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation did not converge or failed numerically.
   */
  QL_STATUS_NUMERICAL = 3,
};
#ifndef __cplusplus
typedef int32_t QlStatus;
#endif // __cplusplus

/**
 * Imaginary-time evolution record; opaque.
 */
typedef struct QlQiteTrace QlQiteTrace;

/**
 * Full eigensystem of the ring Hamiltonian; opaque.
 */
typedef struct QlSpectrum QlSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ql_last_error(void);

/**
 * Exact spectrum of the transverse-field Ising ring by dense
 * diagonalization. On success `*out` owns a new handle.
 *
 * # Safety
 * `out` must point to writable memory for one pointer.
 */
QlStatus ql_oracle_spectrum(uintptr_t num_sites,
                            double coupling,
                            double field,
                            struct QlSpectrum **out);

/**
 * Spectrum assembled by the imaginary-time / Krylov pipeline in exact
 * measurement mode. On success `*out` owns a new handle.
 *
 * # Safety
 * `out` must point to writable memory for one pointer.
 */
QlStatus ql_assembled_spectrum(uintptr_t num_sites,
                               double coupling,
                               double field,
                               struct QlSpectrum **out);

/**
 * Number of levels in the spectrum; 0 for a null handle.
 *
 * # Safety
 * `spec` must be a live handle from this library or null.
 */
uintptr_t ql_spectrum_dim(const struct QlSpectrum *spec);

/**
 * Copy the ascending energies into `buf` (capacity `len` doubles).
 *
 * # Safety
 * `spec` must be a live handle; `buf` must hold at least `len` doubles.
 */
QlStatus ql_spectrum_energies(const struct QlSpectrum *spec, double *buf, uintptr_t len);

/**
 * Release a spectrum handle; null is ignored.
 *
 * # Safety
 * `spec` must be a handle from this library that has not been freed.
 */
void ql_spectrum_free(struct QlSpectrum *spec);

/**
 * Probability of measuring basis state `x_fin` at time `t` after starting
 * from basis state `x_in`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
QlStatus ql_transition_probability(const struct QlSpectrum *spec,
                                   uintptr_t x_in,
                                   uintptr_t x_fin,
                                   double t,
                                   double *out);

/**
 * Occupation of `site` at time `t` after starting from basis state `x`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
QlStatus ql_occupation(const struct QlSpectrum *spec,
                       uintptr_t x,
                       uintptr_t site,
                       double t,
                       double *out);

/**
 * Staggered magnetization `1 - (2/N) sum_i <n_i>` at time `t` from basis
 * state `x`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
QlStatus ql_magnetization(const struct QlSpectrum *spec, uintptr_t x, double t, double *out);

/**
 * Gibbs-weighted energy at inverse temperature `beta` for the ring
 * Hamiltonian with the given couplings.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
QlStatus ql_thermal_energy(const struct QlSpectrum *spec,
                           double coupling,
                           double field,
                           double beta,
                           double *out);

/**
 * Run imaginary-time evolution from the state described by `initial`
 * (`lib:<name>` or a signed bitstring list such as `+110,-011`), against
 * the ring Hamiltonian, negated when `negate_h` is nonzero. On success
 * `*out` owns a new trace handle.
 *
 * # Safety
 * `initial` must be a NUL-terminated string; `out` must be writable.
 */
QlStatus ql_qite_run(uintptr_t num_sites,
                     double coupling,
                     double field,
                     int32_t negate_h,
                     const char *initial,
                     double dtau,
                     uintptr_t steps,
                     struct QlQiteTrace **out);

/**
 * Number of recorded energies (steps + 1); 0 for a null handle.
 *
 * # Safety
 * `trace` must be a live handle from this library or null.
 */
uintptr_t ql_qite_len(const struct QlQiteTrace *trace);

/**
 * Copy the energy-vs-imaginary-time record into `buf`.
 *
 * # Safety
 * `trace` must be a live handle; `buf` must hold at least `len` doubles.
 */
QlStatus ql_qite_energies(const struct QlQiteTrace *trace, double *buf, uintptr_t len);

/**
 * Release a trace handle; null is ignored.
 *
 * # Safety
 * `trace` must be a handle from this library that has not been freed.
 */
void ql_qite_free(struct QlQiteTrace *trace);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* QLANCZOS_H */
