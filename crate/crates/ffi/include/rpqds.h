#ifndef RPQDS_H
#define RPQDS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RpqdsProtocolKind {
  RPQDS_PROTOCOL_KIND_SNS_ASYMPTOTIC = 0,
  RPQDS_PROTOCOL_KIND_SCF_ASYMPTOTIC = 1,
  RPQDS_PROTOCOL_KIND_SNS_FINITE = 2,
} RpqdsProtocolKind;

typedef enum RpqdsStatus {
  RPQDS_STATUS_OK = 0,
  RPQDS_STATUS_NULL_POINTER = 1,
  RPQDS_STATUS_INVALID_PARAM = 2,
  RPQDS_STATUS_INFEASIBLE = 3,
  RPQDS_STATUS_NUMERIC = 4,
  RPQDS_STATUS_UNKNOWN_NAME = 5,
  RPQDS_STATUS_PANIC = 6,
} RpqdsStatus;

/**
 * A protocol and its parameters.
 */
typedef struct RpqdsProtocol RpqdsProtocol;

/**
 * Rate and security report of one evaluation.
 */
typedef struct RpqdsResult RpqdsResult;

/**
 * Experimental constants.
 */
typedef struct RpqdsSystem RpqdsSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *rpqds_last_error(void);

/**
 * Default system parameters.
 */
struct RpqdsSystem *rpqds_system_new(void);

/**
 * # Safety
 * `sys` must come from `rpqds_system_new` and not be used afterwards.
 */
void rpqds_system_free(struct RpqdsSystem *sys);

/**
 * Sets a system parameter by field name (`alpha`, `eta_d`, `p_d`, `e_d`,
 * `distance_km`, `epsilon`, `g`, `eps_e`). The value is checked when the
 * system is used.
 *
 * # Safety
 * `sys` must be a live handle and `name` a NUL-terminated string.
 */
enum RpqdsStatus rpqds_system_set(struct RpqdsSystem *sys, const char *name, double value);

/**
 * # Safety
 * `sys` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum RpqdsStatus rpqds_system_get(const struct RpqdsSystem *sys, const char *name, double *out);

/**
 * A protocol with default parameters; `kind` is an [`RpqdsProtocolKind`].
 * Returns null for an unknown kind.
 */
struct RpqdsProtocol *rpqds_protocol_new(int32_t kind);

/**
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void rpqds_protocol_free(struct RpqdsProtocol *p);

/**
 * Sets a protocol parameter by field name.
 *
 * # Safety
 * `p` must be a live handle and `name` a NUL-terminated string.
 */
enum RpqdsStatus rpqds_protocol_set(struct RpqdsProtocol *p, const char *name, double value);

/**
 * # Safety
 * `p` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum RpqdsStatus rpqds_protocol_get(const struct RpqdsProtocol *p, const char *name, double *out);

/**
 * Signature rate of a protocol setting. On success `*out` receives a new
 * result handle.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum RpqdsStatus rpqds_evaluate(const struct RpqdsSystem *sys,
                                const struct RpqdsProtocol *protocol,
                                bool use_rp,
                                struct RpqdsResult **out);

/**
 * Maximizes the rate of protocol `kind` over the default search space, starting from the
 * parameters in `start` (or defaults when null). On success `*out_result`
 * and `*out_protocol` receive new handles.
 *
 * # Safety
 * Non-null pointers must be live handles or writable locations.
 */
enum RpqdsStatus rpqds_optimize(const struct RpqdsSystem *sys,
                                int32_t kind,
                                const struct RpqdsProtocol *start,
                                bool use_rp,
                                size_t budget,
                                uint64_t seed,
                                struct RpqdsResult **out_result,
                                struct RpqdsProtocol **out_protocol);

/**
 * # Safety
 * `r` must come from this library and not be used afterwards.
 */
void rpqds_result_free(struct RpqdsResult *r);

/**
 * Reads a result field: `rate`, `n_s`, `n_pulses`, `sig_len`, `s_a`,
 * `s_v`, `p_ro`, `p_fo`, `p_re`, `epsilon`, `secure_fraction`.
 *
 * # Safety
 * `r` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum RpqdsStatus rpqds_result_get(const struct RpqdsResult *r, const char *name, double *out);

/**
 * Binary entropy in bits.
 *
 * # Safety
 * `out` must be writable.
 */
enum RpqdsStatus rpqds_binary_entropy(double p, double *out);

/**
 * Secure fraction after pairing for untagged fraction `d` and phase error
 * `e`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RpqdsStatus rpqds_secure_fraction(double d, double e, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPQDS_H */
