#ifndef BUCKSHARE_H
#define BUCKSHARE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every call.
typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_ARGUMENT = 2,
  // Scenario text failed to parse or validate.
  BS_STATUS_PARSE_ERROR = 3,
  // Reference at or above an input voltage.
  BS_STATUS_INFEASIBLE = 4,
  // Converters too similar for the sharing loop.
  BS_STATUS_DEGENERATE_COUPLING = 5,
  BS_STATUS_DIVERGENCE = 6,
  BS_STATUS_CCM_VIOLATION = 7,
  BS_STATUS_OUT_OF_RANGE = 8,
  BS_STATUS_PANIC = 99,
} BsStatus;

// Simulation setup, created by one of the `bs_scenario_*` constructors.
typedef struct BsScenario BsScenario;

// Recorded samples of one run.
typedef struct BsTrace BsTrace;

typedef struct BsState {
  double i_l1;
  double i_l2;
  double vo;
  double d2;
} BsState;

typedef struct BsRecord {
  double t;
  double i_l1;
  double i_l2;
  double vo;
  double d1;
  double d2;
  double d2_dot;
  double e;
  double e2;
  double v1_lyap;
  double v2_lyap;
  double r_active;
  bool sat1;
  bool sat2;
} BsRecord;

typedef struct BsMetricsConfig {
  double band;
  double share_threshold;
  double lyap_tol;
  double lyap_start;
} BsMetricsConfig;

// Settling and recovery times are NaN when the trace never settles.
typedef struct BsMetrics {
  double settle_time_v;
  double settle_time_share;
  double ss_voltage_error;
  double ss_sharing_error;
  double recovery_time;
  double lyap_violation_fraction;
  size_t lyap_pairs;
  double max_duty_saturation_time;
} BsMetrics;

typedef struct BsGains {
  double k1;
  double k2;
  double x_guard;
  double duty_min;
  double duty_max;
} BsGains;

// One converter, SI units.
typedef struct BsConverter {
  double inductance;
  double capacitance;
  double vin;
  double i_max;
} BsConverter;

typedef struct BsSignals {
  double d1;
  double d2_dot;
  double e;
  double e2;
  double i_tilde;
  double v_tilde;
  double v1_lyap;
  double v2_lyap;
  bool d1_saturated;
  bool d2_saturated;
} BsSignals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none.
//
// The pointer stays valid until the next failing call on the same thread.
const char *bs_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *bs_version(void);

// Reference setup: cold start, 10 ohm load, 0.1 s.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum BsStatus bs_scenario_reference_constant(struct BsScenario **out);

// Reference setup with the load stepping from 10 to 15 ohm at 50 ms.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum BsStatus bs_scenario_reference_step(struct BsScenario **out);

// Parse scenario-file text (UTF-8, NUL-terminated).
//
// # Safety
// `text` must be null or a valid C string; `out` must be null or writable.
enum BsStatus bs_scenario_parse(const char *text, struct BsScenario **out);

// Release a scenario. Null is ignored.
//
// # Safety
// `scenario` must come from a `bs_scenario_*` constructor and not be used afterwards.
void bs_scenario_free(struct BsScenario *scenario);

// # Safety
// `scenario` must be null or a live handle.
enum BsStatus bs_scenario_set_dt(struct BsScenario *scenario, double dt);

// # Safety
// `scenario` must be null or a live handle.
enum BsStatus bs_scenario_set_t_end(struct BsScenario *scenario, double t_end);

// # Safety
// `scenario` must be null or a live handle.
enum BsStatus bs_scenario_set_record_every(struct BsScenario *scenario, size_t record_every);

// Start from the analytic equilibrium of the initial load instead of rest.
//
// # Safety
// `scenario` must be null or a live handle.
enum BsStatus bs_scenario_start_at_equilibrium(struct BsScenario *scenario);

// Replace the load schedule with `n` `(t, R)` pairs; the first must be at t = 0.
//
// # Safety
// `scenario` must be null or a live handle; `times` and `resistances` must
// each be null or point to `n` values.
enum BsStatus bs_scenario_set_load(struct BsScenario *scenario,
                                   const double *times,
                                   const double *resistances,
                                   size_t n);

// Current initial state of a scenario.
//
// # Safety
// `scenario` must be null or a live handle; `out` null or writable.
enum BsStatus bs_scenario_initial_state(const struct BsScenario *scenario, struct BsState *out);

// Simulate a scenario.
//
// When the run stops early with `BS_STATUS_DIVERGENCE` or
// `BS_STATUS_CCM_VIOLATION`, `*out` still receives the samples recorded
// before the failure and must be freed. On any other failure `*out` is set
// to null. A false `ccm_check` disables the conduction check.
//
// # Safety
// `scenario` must be null or a live handle; `out` null or writable.
enum BsStatus bs_run(const struct BsScenario *scenario, bool ccm_check, struct BsTrace **out);

// Release a trace. Null is ignored.
//
// # Safety
// `trace` must come from [`bs_run`] and not be used afterwards.
void bs_trace_free(struct BsTrace *trace);

// # Safety
// `trace` must be null or a live handle; `out` null or writable.
enum BsStatus bs_trace_len(const struct BsTrace *trace, size_t *out);

// # Safety
// `trace` must be null or a live handle; `out` null or writable.
enum BsStatus bs_trace_get(const struct BsTrace *trace, size_t index, struct BsRecord *out);

// Metrics of a trace against `vref`. A null `config` uses the defaults.
//
// # Safety
// `trace` must be null or a live handle; `config` null or readable; `out` null or writable.
enum BsStatus bs_trace_metrics(const struct BsTrace *trace,
                               double vref,
                               const struct BsMetricsConfig *config,
                               struct BsMetrics *out);

// Default metrics thresholds.
//
// # Safety
// `out` must be null or writable.
enum BsStatus bs_metrics_config_default(struct BsMetricsConfig *out);

// Default gains.
//
// # Safety
// `out` must be null or writable.
enum BsStatus bs_gains_default(struct BsGains *out);

// Steady state with `Vo = vref` and currents shared by rating.
//
// # Safety
// Pointers must be null or valid.
enum BsStatus bs_equilibrium(const struct BsConverter *c1,
                             const struct BsConverter *c2,
                             double r,
                             double vref,
                             struct BsState *out);

// Evaluate both control loops at one state.
//
// # Safety
// Pointers must be null or valid.
enum BsStatus bs_controller_step(const struct BsState *state,
                                 double vref,
                                 double r,
                                 const struct BsConverter *c1,
                                 const struct BsConverter *c2,
                                 const struct BsGains *gains,
                                 struct BsSignals *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BUCKSHARE_H */
