#include "core/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tega {

JsonReader::JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw Error(ErrorCode::kParse, path_ + " must be an object");
}

const Json* JsonReader::find(const char* key) {
  seen_.emplace_back(key);
  auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

void JsonReader::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      throw Error(ErrorCode::kParse, "unknown key " + path_ + "." + key);
    }
  }
}

namespace {

std::string threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::kSpatialSigma ? "spatial_sigma" : "intensity_spread";
}

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "spatial_sigma") return ThresholdMode::kSpatialSigma;
  if (s == "intensity_spread") return ThresholdMode::kIntensitySpread;
  throw Error(ErrorCode::kParse, "unknown threshold_mode '" + s + "'");
}

void read_operator(const Json& j, const std::string& path, OperatorModel& m) {
  JsonReader r(j, path);
  r.read("gain", m.gain);
  r.read("reaction_delay", m.reaction_delay_s);
  r.read("noise_sd", m.noise_sd);
  r.read("noise_tau", m.noise_tau_s);
  r.read("target_intensity", m.target_intensity);
  r.read("deadband", m.deadband);
  r.read("plan_mean", m.plan_mean);
  r.read("plan_sd", m.plan_sd);
  r.read("ramp_time", m.ramp_time_s);
  r.finish();
}

void read_tactile(const Json& j, const std::string& path, TactileConfig& t) {
  JsonReader r(j, path);
  std::array<double, 3> w{t.weights.r, t.weights.g, t.weights.b};
  if (r.read("weights", w)) t.weights = {w[0], w[1], w[2]};
  r.read("epsilon_mass", t.epsilon_mass);
  r.read("threshold_coeff", t.threshold_coeff);
  std::string mode;
  if (r.read("threshold_mode", mode)) t.threshold_mode = parse_threshold_mode(mode);
  r.read("baseline_frames", t.baseline_frames);
  r.finish();
}

}  // namespace

Json object_to_json(const ObjectSpec& o) {
  Json j;
  j["name"] = o.name;
  j["description"] = o.description;
  j["mass"] = o.mass_kg;
  j["stiffness"] = o.stiffness_n_per_mm;
  j["friction_mu"] = o.friction_mu;
  j["crush_force"] = std::isinf(o.crush_force_n) ? Json(nullptr) : Json(o.crush_force_n);
  j["contact_sharpness"] = o.contact_sharpness;
  return j;
}

ObjectSpec object_from_json(const Json& j) {
  JsonReader r(j, "object");
  ObjectSpec o;
  if (!r.read("name", o.name)) throw Error(ErrorCode::kParse, "object without a name");
  r.read("description", o.description);
  r.read("mass", o.mass_kg);
  r.read("stiffness", o.stiffness_n_per_mm);
  r.read("friction_mu", o.friction_mu);
  if (const Json* c = r.find("crush_force")) {
    o.crush_force_n = c->is_null() ? std::numeric_limits<double>::infinity() : c->get<double>();
  }
  r.read("contact_sharpness", o.contact_sharpness);
  r.finish();
  o.validate();
  return o;
}

Json objects_to_json(const std::vector<ObjectSpec>& objects) {
  Json j = Json::array();
  for (const ObjectSpec& o : objects) j.push_back(object_to_json(o));
  return j;
}

std::vector<ObjectSpec> objects_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, "object library must be an array");
  std::vector<ObjectSpec> out;
  for (const Json& e : j) {
    ObjectSpec o = object_from_json(e);
    for (const ObjectSpec& prev : out) {
      if (prev.name == o.name) throw Error(ErrorCode::kParse, "duplicate object " + o.name);
    }
    out.push_back(std::move(o));
  }
  return out;
}

Json trial_config_to_json(const TrialConfig& c) {
  Json j;
  j["object"] = c.object;
  j["condition"] = condition_name(c.condition);
  j["seed"] = c.seed;
  j["time_limit"] = c.time_limit_s;
  j["dt"] = c.dt_s;
  j["stable_hold"] = c.stable_hold_s;

  const OperatorModel& m = c.operator_model;
  j["operator"] = {{"gain", m.gain},
                   {"reaction_delay", m.reaction_delay_s},
                   {"noise_sd", m.noise_sd},
                   {"noise_tau", m.noise_tau_s},
                   {"target_intensity", m.target_intensity},
                   {"deadband", m.deadband},
                   {"plan_mean", m.plan_mean},
                   {"plan_sd", m.plan_sd},
                   {"ramp_time", m.ramp_time_s}};

  const TactileConfig& t = c.tactile;
  j["tactile"] = {{"weights", {t.weights.r, t.weights.g, t.weights.b}},
                  {"epsilon_mass", t.epsilon_mass},
                  {"threshold_coeff", t.threshold_coeff},
                  {"threshold_mode", threshold_mode_name(t.threshold_mode)},
                  {"baseline_frames", t.baseline_frames}};

  j["haptic"] = {{"epsilon", c.haptic.epsilon},
                 {"zero_when_no_contact", c.haptic.zero_when_no_contact}};

  const CalibrationOptions& v = c.vest_calibration;
  j["vest_calibration"] = {{"use_percentile", v.use_percentile},
                           {"percentile", v.percentile},
                           {"duration", v.duration ? Json(*v.duration) : Json(nullptr)},
                           {"frames_per_level", c.calibration_frames_per_level}};

  j["emg"] = {{"sample_rate", c.emg.sample_rate_hz},
              {"cutoff", c.emg.cutoff_hz},
              {"filter_order", c.emg.filter_order},
              {"block_size", c.emg.block_size},
              {"rectify", c.emg.rectify},
              {"calibration_time", c.emg_calibration_s}};

  j["emg_synth"] = {{"envelope_scale", c.emg_synth.envelope_scale_mv},
                    {"channel_gain", c.emg_synth.channel_gain},
                    {"noise_sd", c.emg_synth.noise_sd}};

  j["render"] = {{"width", c.render.width},
                 {"height", c.render.height},
                 {"peak_gain", c.render.peak_gain},
                 {"radius_gain", c.render.radius_gain},
                 {"noise_sd", c.render.noise_sd},
                 {"channel_gain", c.render.channel_gain}};

  j["world"] = {{"gravity", c.world.gravity},
                {"hold_margin", c.world.hold_margin},
                {"lift_target", c.world.lift_target_m},
                {"lift_speed", c.world.lift_speed},
                {"slip_speed", c.world.slip_speed},
                {"deformation_dwell", c.world.deformation_dwell_s},
                {"crush_sustain", c.world.crush_sustain_s}};

  j["pose_forces"] = c.pose_forces.newtons;
  j["objects"] = objects_to_json(c.objects);
  return j;
}

TrialConfig trial_config_from_json(const Json& j, TrialConfig c) {
  JsonReader r(j, "config");
  r.read("object", c.object);
  std::string cond;
  if (r.read("condition", cond)) c.condition = parse_condition(cond);
  r.read("seed", c.seed);
  r.read("time_limit", c.time_limit_s);
  r.read("dt", c.dt_s);
  r.read("stable_hold", c.stable_hold_s);

  if (const Json* s = r.find("operator")) read_operator(*s, r.child("operator"), c.operator_model);
  if (const Json* s = r.find("tactile")) read_tactile(*s, r.child("tactile"), c.tactile);

  if (const Json* s = r.find("haptic")) {
    JsonReader h(*s, r.child("haptic"));
    h.read("epsilon", c.haptic.epsilon);
    h.read("zero_when_no_contact", c.haptic.zero_when_no_contact);
    h.finish();
  }
  if (const Json* s = r.find("vest_calibration")) {
    JsonReader v(*s, r.child("vest_calibration"));
    v.read("use_percentile", c.vest_calibration.use_percentile);
    v.read("percentile", c.vest_calibration.percentile);
    if (const Json* d = v.find("duration")) {
      c.vest_calibration.duration =
          d->is_null() ? std::nullopt : std::optional<double>(d->get<double>());
    }
    v.read("frames_per_level", c.calibration_frames_per_level);
    v.finish();
  }
  if (const Json* s = r.find("emg")) {
    JsonReader e(*s, r.child("emg"));
    e.read("sample_rate", c.emg.sample_rate_hz);
    e.read("cutoff", c.emg.cutoff_hz);
    e.read("filter_order", c.emg.filter_order);
    e.read("block_size", c.emg.block_size);
    e.read("rectify", c.emg.rectify);
    e.read("calibration_time", c.emg_calibration_s);
    e.finish();
  }
  if (const Json* s = r.find("emg_synth")) {
    JsonReader e(*s, r.child("emg_synth"));
    e.read("envelope_scale", c.emg_synth.envelope_scale_mv);
    e.read("channel_gain", c.emg_synth.channel_gain);
    e.read("noise_sd", c.emg_synth.noise_sd);
    e.finish();
  }
  if (const Json* s = r.find("render")) {
    JsonReader e(*s, r.child("render"));
    e.read("width", c.render.width);
    e.read("height", c.render.height);
    e.read("peak_gain", c.render.peak_gain);
    e.read("radius_gain", c.render.radius_gain);
    e.read("noise_sd", c.render.noise_sd);
    e.read("channel_gain", c.render.channel_gain);
    e.finish();
  }
  if (const Json* s = r.find("world")) {
    JsonReader e(*s, r.child("world"));
    e.read("gravity", c.world.gravity);
    e.read("hold_margin", c.world.hold_margin);
    e.read("lift_target", c.world.lift_target_m);
    e.read("lift_speed", c.world.lift_speed);
    e.read("slip_speed", c.world.slip_speed);
    e.read("deformation_dwell", c.world.deformation_dwell_s);
    e.read("crush_sustain", c.world.crush_sustain_s);
    e.finish();
  }
  r.read("pose_forces", c.pose_forces.newtons);
  if (const Json* s = r.find("objects")) c.objects = objects_from_json(*s);
  r.finish();
  return c;
}

}  // namespace tega
