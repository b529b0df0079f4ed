#ifndef CAUSAL_CAPACITY_H
#define CAUSAL_CAPACITY_H

#include <stddef.h>
#include <stdint.h>

// Result codes shared by all functions.
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_DIMENSION_MISMATCH = 3,
  CC_STATUS_NOT_PHYSICAL = 4,
  CC_STATUS_PARSE = 5,
  CC_STATUS_SCHEMA = 6,
  CC_STATUS_INVARIANT = 7,
  CC_STATUS_IO = 8,
  CC_STATUS_NUMERICAL = 9,
  CC_STATUS_UNKNOWN_EXPERIMENT = 10,
  CC_STATUS_BUFFER_TOO_SMALL = 11,
  CC_STATUS_PANIC = 12,
} CcStatus;

// Opaque channel handle.
typedef struct CcChannel CcChannel;

// Opaque pure-process handle.
typedef struct CcProcess CcProcess;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The
// pointer stays valid until the next failing call on the same thread.
const char *cc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cc_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string obtained from this library, freed once.
void cc_string_free(char *s);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_channel_depolarizing(uintptr_t d, struct CcChannel **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_channel_xy(struct CcChannel **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_channel_bit_flip(double p, struct CcChannel **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_channel_phase_flip(double q, struct CcChannel **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_channel_identity(uintptr_t d, struct CcChannel **out);

// Seeded random CPTP map with environment dimension `env_dim`.
//
// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_channel_random(uintptr_t in_dim,
                                uintptr_t out_dim,
                                uintptr_t env_dim,
                                uint64_t seed,
                                struct CcChannel **out);

// Builds a channel from `n_kraus` operators of shape `out_dim x in_dim`,
// stored back to back as interleaved row-major complex numbers
// (`2·n_kraus·out_dim·in_dim` doubles).
//
// # Safety
// `data` must point to that many doubles and `out` must be valid.
enum CcStatus cc_channel_from_kraus(uintptr_t n_kraus,
                                    uintptr_t out_dim,
                                    uintptr_t in_dim,
                                    const double *data,
                                    struct CcChannel **out);

// Parses a channel from its JSON description.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid.
enum CcStatus cc_channel_from_json(const char *json, struct CcChannel **out);

// JSON description of a channel; free the result with [`cc_string_free`].
//
// # Safety
// `ch` must be a live handle and `out` valid.
enum CcStatus cc_channel_to_json(const struct CcChannel *ch, char **out);

// # Safety
// `ch` must be a live handle; output pointers must be valid.
enum CcStatus cc_channel_dims(const struct CcChannel *ch, uintptr_t *in_dim, uintptr_t *out_dim);

// Copies the Choi matrix (side `in_dim·out_dim`) into `buf` as interleaved
// row-major complex numbers. `len` is the capacity of `buf` in doubles.
//
// # Safety
// `ch` must be a live handle and `buf` must hold `len` doubles.
enum CcStatus cc_channel_choi(const struct CcChannel *ch, double *buf, uintptr_t len);

// The channel `second ∘ first`.
//
// # Safety
// Both handles must be live and `out` valid.
enum CcStatus cc_channel_compose(const struct CcChannel *second,
                                 const struct CcChannel *first,
                                 struct CcChannel **out);

// # Safety
// `ch` must be null or a handle from this library, freed once.
void cc_channel_free(struct CcChannel *ch);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_process_switch(struct CcProcess **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_process_cnot_sdpp(struct CcProcess **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_process_salek_sdpp(struct CcProcess **out);

// # Safety
// `out` must be a valid pointer.
enum CcStatus cc_process_shor_sdpp(struct CcProcess **out);

// Parses a process from its JSON description.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid.
enum CcStatus cc_process_from_json(const char *json, struct CcProcess **out);

// Induced channel `P → (C, F)` for the parties' channels `a` and `b`.
//
// # Safety
// All handles must be live and `out` valid.
enum CcStatus cc_process_apply(const struct CcProcess *w,
                               const struct CcChannel *a,
                               const struct CcChannel *b,
                               struct CcChannel **out);

// Sampling check of a pure process. `passed` receives 1 or 0.
//
// # Safety
// `w` must be live; output pointers must be valid.
enum CcStatus cc_process_validate(const struct CcProcess *w,
                                  uintptr_t n_samples,
                                  uint64_t seed,
                                  int *passed,
                                  double *max_second_eigenvalue);

// # Safety
// `w` must be null or a handle from this library, freed once.
void cc_process_free(struct CcProcess *w);

// Best Holevo quantity over pure ensembles of `n_states` states.
//
// # Safety
// `ch` must be live and `value` valid.
enum CcStatus cc_optimize_holevo(const struct CcChannel *ch,
                                 uintptr_t n_states,
                                 uintptr_t restarts,
                                 uintptr_t max_iter,
                                 uint64_t seed,
                                 double *value);

// Best one-shot coherent information.
//
// # Safety
// `ch` must be live and `value` valid.
enum CcStatus cc_optimize_coherent_information(const struct CcChannel *ch,
                                               uintptr_t restarts,
                                               uintptr_t max_iter,
                                               uint64_t seed,
                                               double *value);

// # Safety
// `ch` must be live and `value` valid.
enum CcStatus cc_entanglement_fidelity(const struct CcChannel *ch, double *value);

// Knill–Laflamme test on the whole input space. `recovery_fidelity`
// receives NaN when the channel is not correctable.
//
// # Safety
// `ch` must be live; output pointers must be valid.
enum CcStatus cc_kl_correctability(const struct CcChannel *ch,
                                   double tol,
                                   int *correctable,
                                   double *max_violation,
                                   double *recovery_fidelity);

// Runs a registered experiment and returns its JSON report, which must be
// released with [`cc_string_free`].
//
// # Safety
// `name` must be a NUL-terminated string; output pointers must be valid.
enum CcStatus cc_run_experiment(const char *name, uint64_t seed, int *passed, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSAL_CAPACITY_H */
