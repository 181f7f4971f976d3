/* C ABI for the otoc-sim library.
 *
 * Handles are opaque; every call returns an OtocStatus, and the last error
 * message for the calling thread is available via otoc_last_error.
 */

#ifndef OTOC_SIM_H
#define OTOC_SIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum OtocStatus {
  OTOC_OK = 0,
  OTOC_NULL_POINTER = 1,
  OTOC_INVALID_ARGUMENT = 2,
  OTOC_REGISTER_CEILING = 3,
  OTOC_NUMERICS = 4,
  OTOC_PANIC = 5,
} OtocStatus;

typedef enum OtocMode {
  OTOC_MODE_UNITARY_ONLY = 0,
  OTOC_MODE_DECOHERENCE_ONLY = 1,
  OTOC_MODE_UNITARY_PLUS_DECOHERENCE = 2,
  OTOC_MODE_CTP = 3,
} OtocMode;

/* Opaque simulation handle: a star topology plus Hamiltonian parameters. */
typedef struct OtocSystem OtocSystem;

/* Create a handle for a `branches`-branch register with `h_per_branch`
 * first-layer spins per branch and `f_per_h` shared second-layer spins per
 * branch, coupling constant `j_hz` (Hz) and field amplitude `g`.
 * `central_field_once` is 0 or 1. */
OtocStatus otoc_system_new(size_t branches,
                           size_t h_per_branch,
                           size_t f_per_h,
                           double j_hz,
                           double g,
                           int central_field_once,
                           OtocSystem **out);

/* Release a handle; null is a no-op. */
void otoc_system_free(OtocSystem *sys);

/* Total qubit count of the register. */
OtocStatus otoc_system_qubits(const OtocSystem *sys, size_t *out);

/* Coherence order q = N1 - 2n + 1. */
OtocStatus otoc_coherence_order(const OtocSystem *sys, size_t n, int64_t *out);

/* MQC OTOC series on n_points times spanning [0, max_jt]. out_jt and
 * out_values must each hold n_points doubles. Mode parameters that do not
 * apply may be passed as 0: t2_star_jt/dt_jt configure the dephasing modes,
 * ctp_total_jt the constant-time protocol. */
OtocStatus otoc_mqc_series(const OtocSystem *sys,
                           size_t n,
                           OtocMode mode,
                           double t2_star_jt,
                           double dt_jt,
                           double ctp_total_jt,
                           double max_jt,
                           size_t n_points,
                           double *out_jt,
                           double *out_values);

/* Layer-scrambling OTOC series; same buffer contract as otoc_mqc_series. */
OtocStatus otoc_layer_scrambling_series(const OtocSystem *sys,
                                        double max_jt,
                                        size_t n_points,
                                        double *out_jt,
                                        double *out_values);

/* Pulsed-field-gradient ratio -(gamma_p + (q-1) gamma_h) / gamma_p. */
OtocStatus otoc_gradient_ratio(int64_t q,
                               double gamma_p,
                               double gamma_h,
                               double *out);

/* Copy the calling thread's last error message into buf (NUL-terminated,
 * truncated to cap). Returns the full message length in bytes. */
size_t otoc_last_error(char *buf, size_t cap);

#ifdef __cplusplus
}
#endif

#endif /* OTOC_SIM_H */
