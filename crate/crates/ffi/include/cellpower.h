#ifndef CELLPOWER_H
#define CELLPOWER_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum LpCorner {
  LP_CORNER_TT = 0,
  LP_CORNER_FF = 1,
  LP_CORNER_SS = 2,
  LP_CORNER_FS = 3,
  LP_CORNER_SF = 4,
} LpCorner;

typedef enum LpLeakageSource {
  // Device-model scaling of the table values.
  LP_LEAKAGE_SOURCE_MODEL = 0,
  // Stacked-cell leakage taken verbatim from the table.
  LP_LEAKAGE_SOURCE_TABLE = 1,
} LpLeakageSource;

// Result code of every fallible call.
typedef enum LpStatus {
  LP_STATUS_OK = 0,
  LP_STATUS_NULL_ARGUMENT = 1,
  LP_STATUS_INVALID_UTF8 = 2,
  // Library text failed to parse or validate.
  LP_STATUS_LIBRARY_ERROR = 3,
  // Netlist or activity text has diagnostics.
  LP_STATUS_DIAGNOSTICS = 4,
  // Operating point or model parameters out of range.
  LP_STATUS_DOMAIN_ERROR = 5,
  // Problem too large for an exhaustive routine.
  LP_STATUS_CAPACITY_ERROR = 6,
  LP_STATUS_ANALYSIS_ERROR = 7,
  LP_STATUS_PANIC = 99,
} LpStatus;

// Opaque cell library.
typedef struct LpLibrary LpLibrary;

// Opaque parsed netlist.
typedef struct LpNetlist LpNetlist;

// Analysis conditions. Fill with [`lp_conditions_reference`] and adjust.
typedef struct LpConditions {
  double vdd;
  double frequency_hz;
  double temperature_k;
  enum LpCorner corner;
  // Threshold override in volts; NaN keeps the library's nominal value.
  double vth0;
  enum LpLeakageSource leakage_source;
  // Short-circuit power as a fraction of switching power.
  double k_sc;
} LpConditions;

typedef struct LpEstimate {
  double p_switching_w;
  double p_short_circuit_w;
  double p_leakage_w;
  double p_total_w;
  double critical_delay_ns;
  double area_um2;
} LpEstimate;

typedef struct LpOptimizeResult {
  double leakage_w;
  double critical_delay_ns;
  uint32_t moves_accepted;
  bool feasible;
} LpOptimizeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. Empty after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *lp_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void lp_string_free(char *s);

// Creates the built-in reference library.
//
// # Safety
// `out_lib` must be a valid pointer.
enum LpStatus lp_library_builtin(struct LpLibrary **out_lib);

// Loads a library from JSON text. With `lenient` set, unknown keys are
// tolerated.
//
// # Safety
// `json` must be a NUL-terminated string and `out_lib` a valid pointer.
enum LpStatus lp_library_from_json(const char *json, bool lenient, struct LpLibrary **out_lib);

// Serializes a library to JSON. Free the result with [`lp_string_free`].
//
// # Safety
// `lib` must be a live handle and `out_json` a valid pointer.
enum LpStatus lp_library_to_json(const struct LpLibrary *lib, char **out_json);

// # Safety
// `lib` must be null or a handle not yet freed.
void lp_library_free(struct LpLibrary *lib);

// Conditions at the library's reference point, typical corner, model
// leakage and the default short-circuit fraction.
//
// # Safety
// `lib` must be a live handle and `out_cond` a valid pointer.
enum LpStatus lp_conditions_reference(const struct LpLibrary *lib, struct LpConditions *out_cond);

// Parses and validates netlist text against `lib`.
//
// # Safety
// `lib` must be a live handle, `netlist_text` NUL-terminated, `out_netlist` valid.
enum LpStatus lp_netlist_parse(const struct LpLibrary *lib,
                               const char *netlist_text,
                               struct LpNetlist **out_netlist);

// # Safety
// `nl` must be null or a handle not yet freed.
void lp_netlist_free(struct LpNetlist *nl);

// Number of gate instances, or 0 for a null handle.
//
// # Safety
// `nl` must be null or a live handle.
size_t lp_netlist_instance_count(const struct LpNetlist *nl);

// Power, critical delay and area at the given conditions. `activity_text`
// holds `prob <net> <p>` lines and may be null; unlisted primary inputs
// default to probability 0.5.
//
// # Safety
// Handles must be live; `activity_text` null or NUL-terminated; other
// pointers valid.
enum LpStatus lp_estimate(const struct LpLibrary *lib,
                          const struct LpNetlist *nl,
                          const struct LpConditions *cond,
                          const char *activity_text,
                          struct LpEstimate *out_estimate);

// Greedy leakage minimization under a delay budget. When
// `out_assignment` is non-null it receives `assign <id> <variant>` lines,
// to be freed with [`lp_string_free`].
//
// # Safety
// Handles must be live; `out_assignment` null or valid; other pointers valid.
enum LpStatus lp_optimize(const struct LpLibrary *lib,
                          const struct LpNetlist *nl,
                          const struct LpConditions *cond,
                          double delay_budget_ns,
                          struct LpOptimizeResult *out_result,
                          char **out_assignment);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLPOWER_H */
