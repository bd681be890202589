#ifndef DUMBBELL_H
#define DUMBBELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Report-type bits for [`dbl_plot`].
 */
#define DBL_REPORT_PER_FLOW 1

#define DBL_REPORT_TOTAL 2

/**
 * Result of every call.
 */
typedef enum DblStatus {
  DBL_STATUS_OK = 0,
  DBL_STATUS_NULL_POINTER = 1,
  DBL_STATUS_INVALID_ARGUMENT = 2,
  DBL_STATUS_IO = 3,
  DBL_STATUS_MALFORMED = 4,
  /**
   * The value is mathematically undefined, e.g. Jain's index of all zeros.
   */
  DBL_STATUS_UNDEFINED = 5,
  DBL_STATUS_OUT_OF_RANGE = 6,
  DBL_STATUS_PANIC = 7,
} DblStatus;

/**
 * Opaque flow log.
 */
typedef struct DblFlowLog DblFlowLog;

/**
 * Opaque central-delay schedule.
 */
typedef struct DblSchedule DblSchedule;

/**
 * Run parameters. Durations are nanoseconds.
 */
typedef struct DblRunConfig {
  uint64_t base_ns;
  uint64_t delta_ns;
  uint64_t step_ns;
  uint64_t jitter_ns;
  uint32_t runtime_s;
  /**
   * Mbit/s; zero leaves the central link unshaped.
   */
  double central_rate;
  uint64_t max_delay_ns;
  uint64_t seed;
  uint32_t q1;
  uint32_t q2;
} DblRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last error of the calling thread, or null. Valid until the next call.
 */
const char *dbl_last_error(void);

/**
 * Jain's fairness index of `len` rates.
 *
 * # Safety
 * `rates` must point to `len` readable doubles and `out` to a writable one.
 */
enum DblStatus dbl_jains_index(const double *rates, size_t len, double *out_index);

/**
 * Parses `N`, `Nus`, `Nms` or `Ns`; a bare number is in `default_unit_ns`.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out_ns` writable.
 */
enum DblStatus dbl_parse_duration(const char *text, uint64_t default_unit_ns, uint64_t *out_ns);

/**
 * Builds the per-delta central delay schedule.
 *
 * # Safety
 * `out_schedule` must be writable.
 */
enum DblStatus dbl_schedule_new(uint64_t base_ns,
                                uint64_t delta_ns,
                                uint64_t step_ns,
                                uint64_t max_delay_ns,
                                uint32_t runtime_s,
                                uint64_t seed,
                                struct DblSchedule **out_schedule);

/**
 * Number of delta intervals.
 *
 * # Safety
 * `schedule` must come from [`dbl_schedule_new`]; `out_len` must be writable.
 */
enum DblStatus dbl_schedule_len(const struct DblSchedule *schedule, size_t *out_len);

/**
 * Delay of interval `k` in nanoseconds.
 *
 * # Safety
 * `schedule` must come from [`dbl_schedule_new`]; `out_ns` must be writable.
 */
enum DblStatus dbl_schedule_value(const struct DblSchedule *schedule, size_t k, uint64_t *out_ns);

/**
 * # Safety
 * `schedule` must come from [`dbl_schedule_new`] or be null.
 */
void dbl_schedule_free(struct DblSchedule *schedule);

/**
 * Fills `config` with the defaults: constant zero delay, 30 s, 100 Mbit/s.
 *
 * # Safety
 * `config` must be writable.
 */
enum DblStatus dbl_run_config_default(struct DblRunConfig *config);

/**
 * Runs the experiment described by `config` and the layout file, writing
 * metadata and captures to `output_dir`. A missing layout is created with
 * the example groups.
 *
 * # Safety
 * `config` must be readable; the paths must be nul-terminated strings.
 */
enum DblStatus dbl_run(const struct DblRunConfig *config,
                       const char *layout_path,
                       const char *output_dir);

/**
 * Reruns the experiment saved in a metadata file into `output_dir`.
 *
 * # Safety
 * The paths must be nul-terminated strings.
 */
enum DblStatus dbl_run_metadata(const char *metadata_path, const char *output_dir);

/**
 * Writes one flow log per flow of the captures in `input_dir`.
 *
 * # Safety
 * The paths must be nul-terminated strings.
 */
enum DblStatus dbl_analyze(const char *input_dir, const char *output_dir);

/**
 * Emits plots and statistics. `reports` is a set of `DBL_REPORT_*` bits;
 * `subset_fields` (may be null) adds a per-subset report such as
 * `"scheme direction"`. Colors are the defaults.
 *
 * # Safety
 * The paths must be nul-terminated strings; `subset_fields` may be null.
 */
enum DblStatus dbl_plot(const char *input_dir,
                        const char *output_dir,
                        uint32_t reports,
                        const char *subset_fields,
                        double interval_s);

/**
 * Loads a `data-<n>.log` file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out_log` writable.
 */
enum DblStatus dbl_flow_log_load(const char *path, struct DblFlowLog **out_log);

/**
 * Number of received packets.
 *
 * # Safety
 * `log` must come from [`dbl_flow_log_load`]; `out_len` must be writable.
 */
enum DblStatus dbl_flow_log_len(const struct DblFlowLog *log, size_t *out_len);

/**
 * Lost and sent byte totals.
 *
 * # Safety
 * `log` must come from [`dbl_flow_log_load`]; the outputs must be writable.
 */
enum DblStatus dbl_flow_log_bytes(const struct DblFlowLog *log,
                                  uint64_t *out_lost,
                                  uint64_t *out_sent);

/**
 * Arrival (s), one-way delay (s) and size (bytes) of packet `i`.
 *
 * # Safety
 * `log` must come from [`dbl_flow_log_load`]; the outputs must be writable.
 */
enum DblStatus dbl_flow_log_packet(const struct DblFlowLog *log,
                                   size_t i,
                                   double *out_arrival,
                                   double *out_delay,
                                   uint32_t *out_size);

/**
 * # Safety
 * `log` must come from [`dbl_flow_log_load`] or be null.
 */
void dbl_flow_log_free(struct DblFlowLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUMBBELL_H */
