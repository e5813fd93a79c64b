/* C interface to the tega teleoperation loop library.
 *
 * Conventions:
 *  - Every fallible call returns tega_status; TEGA_OK is zero.
 *  - On failure tega_last_error() describes the problem. The message is
 *    thread-local and valid until the next failing call on the same thread.
 *  - Strings returned through char** are heap-allocated by the library and
 *    must be released with tega_string_free().
 *  - Handles are opaque; a handle must not be used from two threads at once,
 *    except tega_trial_post_activation(), which may be called from any thread.
 *  - Fingers are numbered 0..3 (thumb, index, middle, ring).
 *  - Pose levels in structs are 1..5; JSON messages use 0..4.
 */
#ifndef TEGA_TEGA_H
#define TEGA_TEGA_H

#include <stddef.h>
#include <stdint.h>

#if defined(TEGA_BUILDING_LIBRARY)
#define TEGA_API __attribute__((visibility("default")))
#else
#define TEGA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tega_status {
  TEGA_OK = 0,
  TEGA_ERR_INVALID_ARGUMENT = 1,
  TEGA_ERR_DIMENSION_MISMATCH = 2,
  TEGA_ERR_NO_CONTACT = 3,
  TEGA_ERR_CALIBRATION = 4,
  TEGA_ERR_UNKNOWN_OBJECT = 5,
  TEGA_ERR_IO = 6,
  TEGA_ERR_PARSE = 7,
  TEGA_ERR_REPLAY_MISMATCH = 8,
  TEGA_ERR_INTERNAL = 99
} tega_status;

TEGA_API const char* tega_version(void);
TEGA_API const char* tega_last_error(void);
TEGA_API const char* tega_status_name(tega_status status);
TEGA_API void tega_string_free(char* s);

/* ---- tactile metrics ---------------------------------------------------- */

enum { TEGA_THRESHOLD_SPATIAL_SIGMA = 0, TEGA_THRESHOLD_INTENSITY_SPREAD = 1 };

typedef struct tega_tactile_config {
  double weights[3]; /* grayscale weights r, g, b; non-negative, sum 1 */
  double epsilon_mass;
  double threshold_coeff;
  int threshold_mode;
  uint32_t baseline_frames;
} tega_tactile_config;

typedef struct tega_metrics {
  int finger;
  double t;
  int contact;
  double mu_x;
  double mu_y;
  double sigma;
  double threshold;
  int64_t eda;
  double cci;
} tega_metrics;

TEGA_API void tega_tactile_config_default(tega_tactile_config* out);

/* One-shot metrics of an interleaved RGB frame against a per-channel baseline
 * (width * height * 3 doubles). */
TEGA_API tega_status tega_extract_metrics(const uint8_t* rgb, const double* baseline_rgb,
                                          int width, int height,
                                          const tega_tactile_config* config, /* may be NULL */
                                          tega_metrics* out);

typedef struct tega_tactile tega_tactile;

TEGA_API tega_status tega_tactile_create(int finger, const tega_tactile_config* config,
                                         tega_tactile** out);
TEGA_API void tega_tactile_destroy(tega_tactile* handle);
/* *complete is set to 1 once enough baseline frames have been collected. */
TEGA_API tega_status tega_tactile_add_baseline(tega_tactile* handle, const uint8_t* rgb,
                                               int width, int height, double t, int* complete);
TEGA_API tega_status tega_tactile_process(const tega_tactile* handle, const uint8_t* rgb,
                                          int width, int height, double t, tega_metrics* out);

/* ---- vest mapping ------------------------------------------------------- */

typedef struct tega_finger_calibration {
  double cci_max;
  double eda_max;
} tega_finger_calibration;

typedef struct tega_vest {
  double t;
  int front[16]; /* row-major 4x4, column = finger */
  int back[16];
  int degraded;
} tega_vest;

/* Logistic intensity 0..100 of value for a channel whose maximum is max_value. */
TEGA_API tega_status tega_vest_intensity(double value, double max_value, double epsilon,
                                         int* out);
/* metrics: four records, one per finger, in any order. */
TEGA_API tega_status tega_vest_map(const tega_metrics* metrics, size_t count,
                                   const tega_finger_calibration calibration[4],
                                   int zero_when_no_contact, tega_vest* out);
/* Running maxima of a metrics stream, per finger. */
TEGA_API tega_status tega_vest_calibrate(const tega_metrics* stream, size_t count,
                                         tega_finger_calibration out[4]);

/* ---- EMG intent --------------------------------------------------------- */

typedef struct tega_emg_config {
  double sample_rate_hz;
  double cutoff_hz;
  int filter_order;
  uint32_t block_size;
  int rectify;
} tega_emg_config;

typedef struct tega_pose {
  double t;
  double e_bar[3];
  int per_channel[3]; /* 1..5 */
  int fused;          /* 1..5 */
} tega_pose;

TEGA_API void tega_emg_config_default(tega_emg_config* out);
/* |H(f)| of the designed Butterworth low-pass. */
TEGA_API tega_status tega_butterworth_magnitude(int order, double cutoff_hz,
                                                double sample_rate_hz, double frequency_hz,
                                                double* out);
TEGA_API tega_status tega_quantize_pose(double e_bar, double e_max, int* out);
TEGA_API tega_status tega_fuse_poses(int a1, int a2, int a3, int* out);

typedef struct tega_emg tega_emg;

TEGA_API tega_status tega_emg_create(const tega_emg_config* config, /* may be NULL */
                                     const double e_max[3], tega_emg** out);
TEGA_API void tega_emg_destroy(tega_emg* handle);
/* *ready is set to 1 when this sample completed a block and *out was written. */
TEGA_API tega_status tega_emg_push(tega_emg* handle, double t, const double channels[3],
                                   int* ready, tega_pose* out);

/* ---- statistics --------------------------------------------------------- */

/* *defined is 0 (and *r untouched) when either series has zero variance. */
TEGA_API tega_status tega_pearson(const double* x, const double* y, size_t n, double* r,
                                  int* defined);

/* ---- configuration ------------------------------------------------------ */

/* Full default trial configuration as JSON. */
TEGA_API tega_status tega_config_default(char** json_out);
/* Merges overrides (JSON object, may be NULL) over the defaults, validates,
 * and returns the complete configuration. */
TEGA_API tega_status tega_config_resolve(const char* overrides_json, char** json_out);

/* ---- trials ------------------------------------------------------------- */

typedef struct tega_trial tega_trial;

/* config_json: trial configuration (may be NULL for defaults). */
TEGA_API tega_status tega_trial_create(const char* config_json, tega_trial** out);
TEGA_API void tega_trial_destroy(tega_trial* handle);
/* Session greeting message. */
TEGA_API tega_status tega_trial_hello(tega_trial* handle, char** json_out);
/* Advances one tick. *messages_out receives the session messages of the tick
 * as JSON lines (activation, pose, frame_metrics, vest, trial events, and the
 * summary once the trial ends). */
TEGA_API tega_status tega_trial_step(tega_trial* handle, char** messages_out);
TEGA_API int tega_trial_done(const tega_trial* handle);
TEGA_API double tega_trial_dt(const tega_trial* handle);
/* Manual condition: activation in [0, 1] applied from the next tick on. */
TEGA_API tega_status tega_trial_post_activation(tega_trial* handle, double activation);
TEGA_API tega_status tega_trial_result(const tega_trial* handle, int with_series,
                                       char** json_out);

/* Runs a trial and records a replayable run directory. */
TEGA_API tega_status tega_run_trial_to_dir(const char* config_json, const char* dir,
                                           const char* command, char** result_json);
/* Returns TEGA_ERR_REPLAY_MISMATCH when recomputation disagrees with the logs;
 * the report is written in both cases. */
TEGA_API tega_status tega_replay(const char* dir, char** report_json);

/* Calibration record (vest maxima and EMG maxima) for the configured object,
 * optionally taking the EMG maxima from a CSV recording (t, ch1, ch2, ch3). */
TEGA_API tega_status tega_calibrate(const char* config_json, const char* emg_csv_path,
                                    char** calibration_json);

/* ---- experiments -------------------------------------------------------- */

/* experiment_json: {objects, conditions, n, base_seed, jobs, keep_series}. */
TEGA_API tega_status tega_run_experiment(const char* trial_config_json,
                                         const char* experiment_json, char** summary_json);
/* format: "table", "json" or "csv". */
TEGA_API tega_status tega_report(const char* summary_json, const char* format,
                                 char** out);

#ifdef __cplusplus
}
#endif

#endif /* TEGA_TEGA_H */
