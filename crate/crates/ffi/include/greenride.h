#ifndef GREENRIDE_H
#define GREENRIDE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GrScenario {
  GR_SCENARIO_FOSSIL = 0,
  GR_SCENARIO_BUSINESS_AS_USUAL = 1,
  GR_SCENARIO_CASE1 = 2,
  GR_SCENARIO_CASE2 = 3,
} GrScenario;

typedef enum GrStatus {
  GR_STATUS_OK = 0,
  GR_STATUS_NULL_ARGUMENT = 1,
  GR_STATUS_INVALID_ARGUMENT = 2,
  GR_STATUS_CONFIG = 3,
  GR_STATUS_LOAD = 4,
  GR_STATUS_INVARIANT = 5,
  GR_STATUS_SOLVER = 6,
  GR_STATUS_PANIC = 7,
} GrStatus;

typedef enum GrWeather {
  GR_WEATHER_SUNNY = 0,
  GR_WEATHER_CLOUDY_MORNING = 1,
  GR_WEATHER_CLOUDY_AFTERNOON = 2,
} GrWeather;

/**
 * Scenario configuration.
 */
typedef struct GrConfig GrConfig;

/**
 * Metrics of one simulated day.
 */
typedef struct GrMetrics GrMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread; do not free.
 */
const char *gr_last_error_message(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void gr_string_free(char *s);

/**
 * Full-scale defaults: 100 EVs, case 1, sunny.
 */
struct GrConfig *gr_config_default(void);

/**
 * Twenty EVs and about five hundred requests.
 */
struct GrConfig *gr_config_desk_scale(void);

/**
 * Parses a TOML scenario; missing keys keep their defaults.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GrStatus gr_config_from_toml(const char *toml, struct GrConfig **out);

/**
 * # Safety
 * `cfg` must be null or a live handle from this library.
 */
void gr_config_free(struct GrConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum GrStatus gr_config_set_scenario(struct GrConfig *cfg, enum GrScenario scenario);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum GrStatus gr_config_set_weather(struct GrConfig *cfg, enum GrWeather weather);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum GrStatus gr_config_set_seed(struct GrConfig *cfg, uint64_t seed);

/**
 * Share of customers accepting pooled rides, in `[0, 1]`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum GrStatus gr_config_set_willingness(struct GrConfig *cfg, double willingness);

/**
 * Simulates one day with the configured seed.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum GrStatus gr_run_scenario(const struct GrConfig *cfg, struct GrMetrics **out);

/**
 * # Safety
 * `metrics` must be null or a live handle from this library.
 */
void gr_metrics_free(struct GrMetrics *metrics);

/**
 * Served share of received rides; NaN for a null handle.
 *
 * # Safety
 * `metrics` must be null or a live handle.
 */
double gr_metrics_qos(const struct GrMetrics *metrics);

/**
 * Unused share of renewable energy; NaN when undefined (no PV, or a
 * fossil fleet) or for a null handle.
 *
 * # Safety
 * `metrics` must be null or a live handle.
 */
double gr_metrics_pl(const struct GrMetrics *metrics);

/**
 * # Safety
 * `metrics` must be null or a live handle.
 */
uint64_t gr_metrics_missed_rides(const struct GrMetrics *metrics);

/**
 * All metrics as JSON; free with [`gr_string_free`]. Null on failure.
 *
 * # Safety
 * `metrics` must be a live handle.
 */
char *gr_metrics_to_json(const struct GrMetrics *metrics);

/**
 * Minimum-cost assignment of a row-major `h x h` cost matrix.
 * `row_to_col` receives `h` column indices.
 *
 * # Safety
 * `cost` must point to `h * h` doubles, `row_to_col` to `h` writable
 * entries and `objective` to one.
 */
enum GrStatus gr_solve_lap(const double *cost, size_t h, size_t *row_to_col, double *objective);

/**
 * Evaluates the merit function on an epoch snapshot. A negative `epsilon`
 * keeps the snapshot's own tolerance.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `merit` and `pass` valid pointers.
 */
enum GrStatus gr_certify_snapshot_json(const char *json, double epsilon, double *merit, bool *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GREENRIDE_H */
