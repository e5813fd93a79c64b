#include "tega/tega.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/emg.hpp"
#include "core/experiment.hpp"
#include "core/haptic.hpp"
#include "core/tactile.hpp"
#include "core/trace.hpp"
#include "core/trial.hpp"
#include "core/wire.hpp"

struct tega_tactile {
  tega::TactileProcessor processor;
};

struct tega_emg {
  tega::EmgPipeline pipeline;
};

struct tega_trial {
  explicit tega_trial(tega::TrialConfig config) : trial(std::move(config)) {}
  tega::Trial trial;
  tega::SessionEncoder encoder;
  bool crushed = false;
};

namespace {

thread_local std::string g_last_error;

tega_status fail(tega_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

tega_status map_code(tega::ErrorCode code) {
  switch (code) {
    case tega::ErrorCode::kInvalidArgument: return TEGA_ERR_INVALID_ARGUMENT;
    case tega::ErrorCode::kDimensionMismatch: return TEGA_ERR_DIMENSION_MISMATCH;
    case tega::ErrorCode::kNoContact: return TEGA_ERR_NO_CONTACT;
    case tega::ErrorCode::kCalibration: return TEGA_ERR_CALIBRATION;
    case tega::ErrorCode::kUnknownObject: return TEGA_ERR_UNKNOWN_OBJECT;
    case tega::ErrorCode::kIo: return TEGA_ERR_IO;
    case tega::ErrorCode::kParse: return TEGA_ERR_PARSE;
    case tega::ErrorCode::kReplayMismatch: return TEGA_ERR_REPLAY_MISMATCH;
  }
  return TEGA_ERR_INTERNAL;
}

template <typename F>
tega_status guard(F&& body) {
  try {
    body();
    return TEGA_OK;
  } catch (const tega::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TEGA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TEGA_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TEGA_ERR_INTERNAL, "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw tega::Error(tega::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tega::Finger to_finger(int finger) {
  require(finger >= 0 && finger < static_cast<int>(tega::kFingerCount), "finger must be 0..3");
  return static_cast<tega::Finger>(finger);
}

tega::TactileConfig to_core(const tega_tactile_config* c) {
  tega::TactileConfig t;
  if (!c) return t;
  t.weights = {c->weights[0], c->weights[1], c->weights[2]};
  t.epsilon_mass = c->epsilon_mass;
  t.threshold_coeff = c->threshold_coeff;
  require(c->threshold_mode == TEGA_THRESHOLD_SPATIAL_SIGMA ||
              c->threshold_mode == TEGA_THRESHOLD_INTENSITY_SPREAD,
          "unknown threshold mode");
  t.threshold_mode = c->threshold_mode == TEGA_THRESHOLD_SPATIAL_SIGMA
                         ? tega::ThresholdMode::kSpatialSigma
                         : tega::ThresholdMode::kIntensitySpread;
  t.baseline_frames = c->baseline_frames;
  return t;
}

tega::TactileFrame to_frame(tega::Finger finger, const uint8_t* rgb, int width, int height,
                            double t) {
  require(rgb != nullptr, "frame pointer is NULL");
  require(width > 0 && height > 0, "frame dimensions must be positive");
  tega::TactileFrame f;
  f.finger = finger;
  f.timestamp = t;
  f.width = width;
  f.height = height;
  f.rgb.assign(rgb, rgb + 3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  return f;
}

tega_metrics to_c(const tega::ContactMetrics& m) {
  tega_metrics out{};
  out.finger = static_cast<int>(m.finger);
  out.t = m.timestamp;
  out.contact = m.contact ? 1 : 0;
  out.mu_x = m.centroid_x;
  out.mu_y = m.centroid_y;
  out.sigma = m.sigma;
  out.threshold = m.threshold;
  out.eda = m.eda;
  out.cci = m.cci;
  return out;
}

tega::ContactMetrics to_core(const tega_metrics& m) {
  tega::ContactMetrics out;
  out.finger = to_finger(m.finger);
  out.timestamp = m.t;
  out.contact = m.contact != 0;
  out.centroid_x = m.mu_x;
  out.centroid_y = m.mu_y;
  out.sigma = m.sigma;
  out.threshold = m.threshold;
  out.eda = m.eda;
  out.cci = m.cci;
  return out;
}

tega::EmgConfig to_core(const tega_emg_config* c) {
  tega::EmgConfig e;
  if (!c) return e;
  e.sample_rate_hz = c->sample_rate_hz;
  e.cutoff_hz = c->cutoff_hz;
  e.filter_order = c->filter_order;
  e.block_size = c->block_size;
  e.rectify = c->rectify != 0;
  return e;
}

tega::Json parse_or_empty(const char* json, const char* what) {
  if (!json || !*json) return tega::Json::object();
  return tega::parse_json(json, what);
}

tega::TrialConfig resolve_config(const char* json) {
  tega::TrialConfig c = tega::trial_config_from_json(parse_or_empty(json, "trial config"));
  c.validate();
  return c;
}

void append_line(std::string& out, const tega::Json& msg) {
  out += msg.dump();
  out += '\n';
}

}  // namespace

extern "C" {

const char* tega_version(void) { return TEGA_VERSION_STRING; }

const char* tega_last_error(void) { return g_last_error.c_str(); }

const char* tega_status_name(tega_status status) {
  switch (status) {
    case TEGA_OK: return "ok";
    case TEGA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TEGA_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case TEGA_ERR_NO_CONTACT: return "no contact";
    case TEGA_ERR_CALIBRATION: return "calibration failure";
    case TEGA_ERR_UNKNOWN_OBJECT: return "unknown object";
    case TEGA_ERR_IO: return "i/o error";
    case TEGA_ERR_PARSE: return "parse error";
    case TEGA_ERR_REPLAY_MISMATCH: return "replay mismatch";
    case TEGA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void tega_string_free(char* s) { std::free(s); }

void tega_tactile_config_default(tega_tactile_config* out) {
  if (!out) return;
  const tega::TactileConfig d;
  out->weights[0] = d.weights.r;
  out->weights[1] = d.weights.g;
  out->weights[2] = d.weights.b;
  out->epsilon_mass = d.epsilon_mass;
  out->threshold_coeff = d.threshold_coeff;
  out->threshold_mode = TEGA_THRESHOLD_SPATIAL_SIGMA;
  out->baseline_frames = static_cast<uint32_t>(d.baseline_frames);
}

tega_status tega_extract_metrics(const uint8_t* rgb, const double* baseline_rgb, int width,
                                 int height, const tega_tactile_config* config,
                                 tega_metrics* out) {
  return guard([&] {
    require(baseline_rgb != nullptr && out != nullptr, "NULL argument");
    const tega::TactileFrame frame = to_frame(tega::Finger::kThumb, rgb, width, height, 0.0);
    tega::BaselineFrame base;
    base.finger = frame.finger;
    base.width = width;
    base.height = height;
    base.rgb.assign(baseline_rgb, baseline_rgb + frame.rgb.size());
    *out = to_c(tega::extract_metrics(frame, base, to_core(config)));
  });
}

tega_status tega_tactile_create(int finger, const tega_tactile_config* config,
                                tega_tactile** out) {
  return guard([&] {
    require(out != nullptr, "NULL output handle");
    *out = new tega_tactile{tega::TactileProcessor(to_finger(finger), to_core(config))};
  });
}

void tega_tactile_destroy(tega_tactile* handle) { delete handle; }

tega_status tega_tactile_add_baseline(tega_tactile* handle, const uint8_t* rgb, int width,
                                      int height, double t, int* complete) {
  return guard([&] {
    require(handle != nullptr, "NULL handle");
    const bool done = handle->processor.add_baseline_frame(
        to_frame(handle->processor.finger(), rgb, width, height, t));
    if (complete) *complete = done ? 1 : 0;
  });
}

tega_status tega_tactile_process(const tega_tactile* handle, const uint8_t* rgb, int width,
                                 int height, double t, tega_metrics* out) {
  return guard([&] {
    require(handle != nullptr && out != nullptr, "NULL argument");
    *out = to_c(handle->processor.process(
        to_frame(handle->processor.finger(), rgb, width, height, t)));
  });
}

tega_status tega_vest_intensity(double value, double max_value, double epsilon, int* out) {
  return guard([&] {
    require(out != nullptr, "NULL output");
    require(max_value > 0.0, "max_value must be positive");
    require(epsilon > 0.0 && epsilon < 0.5, "epsilon must be in (0, 0.5)");
    *out = tega::to_intensity(
        tega::sigmoid_response(value, max_value, tega::derive_k(max_value, epsilon)));
  });
}

tega_status tega_vest_map(const tega_metrics* metrics, size_t count,
                          const tega_finger_calibration calibration[4], int zero_when_no_contact,
                          tega_vest* out) {
  return guard([&] {
    require(metrics != nullptr && calibration != nullptr && out != nullptr, "NULL argument");
    std::vector<tega::ContactMetrics> m;
    for (size_t i = 0; i < count; ++i) m.push_back(to_core(metrics[i]));
    tega::VestCalibration calib{};
    for (std::size_t i = 0; i < tega::kFingerCount; ++i) {
      calib[i] = {static_cast<tega::Finger>(i), calibration[i].cci_max, calibration[i].eda_max};
    }
    tega::HapticConfig hc;
    hc.zero_when_no_contact = zero_when_no_contact != 0;
    const tega::VestCommand v = tega::build_vest_command(m, calib, hc);
    out->t = v.timestamp;
    std::copy(v.front.begin(), v.front.end(), out->front);
    std::copy(v.back.begin(), v.back.end(), out->back);
    out->degraded = v.degraded ? 1 : 0;
  });
}

tega_status tega_vest_calibrate(const tega_metrics* stream, size_t count,
                                tega_finger_calibration out[4]) {
  return guard([&] {
    require(stream != nullptr && out != nullptr, "NULL argument");
    std::vector<tega::ContactMetrics> m;
    for (size_t i = 0; i < count; ++i) m.push_back(to_core(stream[i]));
    const tega::VestCalibration c = tega::calibrate(m);
    for (std::size_t i = 0; i < tega::kFingerCount; ++i) out[i] = {c[i].cci_max, c[i].eda_max};
  });
}

void tega_emg_config_default(tega_emg_config* out) {
  if (!out) return;
  const tega::EmgConfig d;
  out->sample_rate_hz = d.sample_rate_hz;
  out->cutoff_hz = d.cutoff_hz;
  out->filter_order = d.filter_order;
  out->block_size = static_cast<uint32_t>(d.block_size);
  out->rectify = d.rectify ? 1 : 0;
}

tega_status tega_butterworth_magnitude(int order, double cutoff_hz, double sample_rate_hz,
                                       double frequency_hz, double* out) {
  return guard([&] {
    require(out != nullptr, "NULL output");
    *out = tega::design_butterworth(order, cutoff_hz, sample_rate_hz).magnitude(frequency_hz);
  });
}

tega_status tega_quantize_pose(double e_bar, double e_max, int* out) {
  return guard([&] {
    require(out != nullptr, "NULL output");
    *out = tega::quantize_pose(e_bar, e_max).value();
  });
}

tega_status tega_fuse_poses(int a1, int a2, int a3, int* out) {
  return guard([&] {
    require(out != nullptr, "NULL output");
    *out = tega::fuse_poses(tega::PoseIndex(a1), tega::PoseIndex(a2), tega::PoseIndex(a3)).value();
  });
}

tega_status tega_emg_create(const tega_emg_config* config, const double e_max[3],
                            tega_emg** out) {
  return guard([&] {
    require(out != nullptr && e_max != nullptr, "NULL argument");
    tega::ChannelCalibration calib;
    for (std::size_t i = 0; i < tega::kEmgChannels; ++i) calib.e_max[i] = e_max[i];
    *out = new tega_emg{tega::EmgPipeline(to_core(config), calib)};
  });
}

void tega_emg_destroy(tega_emg* handle) { delete handle; }

tega_status tega_emg_push(tega_emg* handle, double t, const double channels[3], int* ready,
                          tega_pose* out) {
  return guard([&] {
    require(handle != nullptr && channels != nullptr && ready != nullptr, "NULL argument");
    tega::EmgSample s;
    s.timestamp = t;
    for (std::size_t i = 0; i < tega::kEmgChannels; ++i) s.channels[i] = channels[i];
    const auto update = handle->pipeline.push(s);
    *ready = update ? 1 : 0;
    if (update && out) {
      out->t = update->timestamp;
      for (std::size_t i = 0; i < tega::kEmgChannels; ++i) {
        out->e_bar[i] = update->e_bar[i];
        out->per_channel[i] = update->per_channel[i].value();
      }
      out->fused = update->fused.value();
    }
  });
}

tega_status tega_pearson(const double* x, const double* y, size_t n, double* r, int* defined) {
  return guard([&] {
    require(x != nullptr && y != nullptr && r != nullptr && defined != nullptr, "NULL argument");
    const auto v = tega::pearson({x, n}, {y, n});
    *defined = v ? 1 : 0;
    if (v) *r = *v;
  });
}

tega_status tega_config_default(char** json_out) {
  return guard([&] {
    require(json_out != nullptr, "NULL output");
    *json_out = dup_string(tega::trial_config_to_json(tega::TrialConfig{}).dump(2));
  });
}

tega_status tega_config_resolve(const char* overrides_json, char** json_out) {
  return guard([&] {
    require(json_out != nullptr, "NULL output");
    *json_out = dup_string(tega::trial_config_to_json(resolve_config(overrides_json)).dump(2));
  });
}

tega_status tega_trial_create(const char* config_json, tega_trial** out) {
  return guard([&] {
    require(out != nullptr, "NULL output handle");
    *out = new tega_trial(resolve_config(config_json));
  });
}

void tega_trial_destroy(tega_trial* handle) { delete handle; }

tega_status tega_trial_hello(tega_trial* handle, char** json_out) {
  return guard([&] {
    require(handle != nullptr && json_out != nullptr, "NULL argument");
    *json_out = dup_string(handle->encoder.hello(0.0, handle->trial.config()).dump());
  });
}

tega_status tega_trial_step(tega_trial* handle, char** messages_out) {
  return guard([&] {
    require(handle != nullptr && messages_out != nullptr, "NULL argument");
    require(!handle->trial.done(), "trial already finished");
    const tega::TickRecord& rec = handle->trial.step();
    tega::SessionEncoder& enc = handle->encoder;
    std::string out;
    append_line(out, enc.activation(rec.t, rec.activation));
    if (rec.pose_updated) append_line(out, enc.pose(rec.pose));
    append_line(out, enc.frame_metrics(rec.t, rec.metrics));
    tega::VestCommand vest = rec.vest;
    vest.timestamp = rec.t;
    append_line(out, enc.vest(vest));
    if (rec.slip_event) append_line(out, enc.trial_event(rec.t, "slip"));
    if (rec.deformation_event) append_line(out, enc.trial_event(rec.t, "deformation"));
    if (rec.world.crushed && !handle->crushed) {
      handle->crushed = true;
      append_line(out, enc.trial_event(rec.t, "crushed"));
    }
    if (rec.success_event) append_line(out, enc.trial_event(rec.t, "success"));
    if (handle->trial.done()) {
      const tega::TrialResult result = handle->trial.result();
      if (!result.success) append_line(out, enc.trial_event(rec.t, "timeout"));
      append_line(out, enc.trial_summary(rec.t, result));
    }
    *messages_out = dup_string(out);
  });
}

int tega_trial_done(const tega_trial* handle) { return handle && handle->trial.done() ? 1 : 0; }

double tega_trial_dt(const tega_trial* handle) {
  return handle ? handle->trial.config().dt_s : 0.0;
}

tega_status tega_trial_post_activation(tega_trial* handle, double activation) {
  return guard([&] {
    require(handle != nullptr, "NULL handle");
    require(activation >= 0.0 && activation <= 1.0, "activation must be in [0, 1]");
    require(handle->trial.config().condition == tega::Condition::kManual,
            "activation can only be posted to a manual trial");
    handle->trial.post_activation(activation);
  });
}

tega_status tega_trial_result(const tega_trial* handle, int with_series, char** json_out) {
  return guard([&] {
    require(handle != nullptr && json_out != nullptr, "NULL argument");
    *json_out = dup_string(tega::result_to_json(handle->trial.result(), with_series != 0).dump());
  });
}

tega_status tega_run_trial_to_dir(const char* config_json, const char* dir, const char* command,
                                  char** result_json) {
  return guard([&] {
    require(dir != nullptr && *dir, "output directory is empty");
    tega::RunOptions opts;
    if (command) opts.command = command;
    const tega::TrialResult r = tega::run_trial_to_dir(resolve_config(config_json), dir, opts);
    if (result_json) *result_json = dup_string(tega::result_to_json(r, false).dump(2));
  });
}

tega_status tega_replay(const char* dir, char** report_json) {
  bool mismatch = false;
  std::string first;
  const tega_status st = guard([&] {
    require(dir != nullptr && *dir, "run directory is empty");
    const tega::ReplayReport report = tega::replay_run(dir);
    tega::Json j;
    j["ok"] = report.ok();
    j["frames"] = report.frames;
    j["metrics_checked"] = report.metrics_checked;
    j["ticks_checked"] = report.ticks_checked;
    j["mismatches"] = report.mismatches;
    if (report_json) *report_json = dup_string(j.dump(2));
    mismatch = !report.ok();
    if (mismatch) first = report.mismatches.front();
  });
  if (st != TEGA_OK) return st;
  if (mismatch) return fail(TEGA_ERR_REPLAY_MISMATCH, "replay mismatch: " + first);
  return TEGA_OK;
}

tega_status tega_calibrate(const char* config_json, const char* emg_csv_path,
                           char** calibration_json) {
  return guard([&] {
    require(calibration_json != nullptr, "NULL output");
    const tega::TrialConfig config = resolve_config(config_json);
    const tega::Trial trial(config);
    tega::CalibrationFile file{trial.vest_calibration(), trial.emg_calibration()};
    if (emg_csv_path && *emg_csv_path) {
      const std::vector<tega::EmgSample> samples = tega::read_emg_csv(emg_csv_path);
      require(!samples.empty(), "EMG recording is empty");
      file.emg = tega::calibrate_channels(samples, config.emg);
    }
    *calibration_json = dup_string(tega::calibration_to_json(file).dump(2));
  });
}

tega_status tega_run_experiment(const char* trial_config_json, const char* experiment_json,
                                char** summary_json) {
  return guard([&] {
    require(summary_json != nullptr, "NULL output");
    tega::ExperimentConfig ec;
    ec.trial = tega::trial_config_from_json(parse_or_empty(trial_config_json, "trial config"));
    ec = tega::experiment_config_from_json(parse_or_empty(experiment_json, "experiment config"),
                                           ec);
    *summary_json = dup_string(tega::summary_to_json(tega::run_experiment(ec)).dump(2));
  });
}

tega_status tega_report(const char* summary_json, const char* format, char** out) {
  return guard([&] {
    require(summary_json != nullptr && format != nullptr && out != nullptr, "NULL argument");
    const tega::ReportFormat f = tega::parse_report_format(format);
    const tega::ExperimentSummary s =
        tega::summary_from_json(tega::parse_json(summary_json, "experiment summary"));
    *out = dup_string(tega::render_report(s, f));
  });
}

}  // extern "C"
