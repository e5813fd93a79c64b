#include "core/wire.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace tega {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + ex.what());
  }
}

template <typename T, std::size_t N>
std::array<T, N> read_array(const Json& j, const char* key) {
  const Json& a = j.at(key);
  if (!a.is_array() || a.size() != N) {
    throw Error(ErrorCode::kParse, std::string("field '") + key + "' must hold " +
                                       std::to_string(N) + " values");
  }
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<T>();
  return out;
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> read_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

Json metrics_to_json(const ContactMetrics& m) {
  Json j;
  j["finger"] = finger_name(m.finger);
  j["t"] = m.timestamp;
  j["contact"] = m.contact;
  j["mu_x"] = m.centroid_x;
  j["mu_y"] = m.centroid_y;
  j["sigma"] = m.sigma;
  j["threshold"] = m.threshold;
  j["eda"] = m.eda;
  j["cci"] = m.cci;
  return j;
}

ContactMetrics metrics_from_json(const Json& j) {
  return guarded("metrics record", [&] {
    ContactMetrics m;
    m.finger = parse_finger(j.at("finger").get<std::string>());
    m.timestamp = j.at("t").get<double>();
    m.contact = j.at("contact").get<bool>();
    m.centroid_x = j.at("mu_x").get<double>();
    m.centroid_y = j.at("mu_y").get<double>();
    m.sigma = j.at("sigma").get<double>();
    m.threshold = j.at("threshold").get<double>();
    m.eda = j.at("eda").get<std::int64_t>();
    m.cci = j.at("cci").get<double>();
    return m;
  });
}

Json vest_message(const VestCommand& vest) {
  Json j;
  j["type"] = "vest";
  j["t"] = vest.timestamp;
  j["front"] = vest.front;
  j["back"] = vest.back;
  j["degraded"] = vest.degraded;
  return j;
}

VestCommand vest_from_message(const Json& j) {
  return guarded("vest message", [&] {
    if (j.at("type") != "vest") throw Error(ErrorCode::kParse, "not a vest message");
    VestCommand v;
    v.timestamp = j.at("t").get<double>();
    v.front = read_array<int, kVestUnitsPerSide>(j, "front");
    v.back = read_array<int, kVestUnitsPerSide>(j, "back");
    v.degraded = j.value("degraded", false);
    return v;
  });
}

Json pose_message(const PoseUpdate& pose) {
  Json j;
  j["type"] = "pose";
  j["t"] = pose.timestamp;
  j["per_channel"] = Json::array();
  for (const PoseIndex& p : pose.per_channel) j["per_channel"].push_back(p.external());
  j["fused"] = pose.fused.external();
  return j;
}

Json emg_message(const EmgSample& sample) {
  Json j;
  j["type"] = "emg";
  j["t"] = sample.timestamp;
  j["channels"] = sample.channels;
  return j;
}

EmgSample emg_from_message(const Json& j) {
  return guarded("emg message", [&] {
    if (j.at("type") != "emg") throw Error(ErrorCode::kParse, "not an emg message");
    EmgSample s;
    s.timestamp = j.at("t").get<double>();
    s.channels = read_array<double, kEmgChannels>(j, "channels");
    return s;
  });
}

std::vector<EmgSample> read_emg_csv(std::istream& in) {
  std::vector<EmgSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 1 + kEmgChannels) {
      throw Error(ErrorCode::kParse, "EMG CSV line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(1 + kEmgChannels) + " columns");
    }
    EmgSample s;
    try {
      s.timestamp = std::stod(cells[0]);
      for (std::size_t c = 0; c < kEmgChannels; ++c) s.channels[c] = std::stod(cells[c + 1]);
    } catch (const std::exception&) {
      if (line_no == 1 && out.empty()) continue;  // header
      throw Error(ErrorCode::kParse, "EMG CSV line " + std::to_string(line_no) + ": bad number");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<EmgSample> read_emg_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_emg_csv(in);
}

Json calibration_to_json(const CalibrationFile& calib) {
  Json j;
  j["schema_version"] = kCalibrationSchemaVersion;
  for (const FingerCalibration& f : calib.vest) {
    j[std::string(finger_name(f.finger))] = {{"cci_max", f.cci_max}, {"eda_max", f.eda_max}};
  }
  if (calib.emg) j["emg"] = {{"e_max", calib.emg->e_max}};
  return j;
}

CalibrationFile calibration_from_json(const Json& j) {
  return guarded("calibration file", [&] {
    const int version = j.at("schema_version").get<int>();
    if (version != kCalibrationSchemaVersion) {
      throw Error(ErrorCode::kParse,
                  "unsupported calibration schema_version " + std::to_string(version));
    }
    CalibrationFile out;
    for (Finger f : kAllFingers) {
      const Json& e = j.at(std::string(finger_name(f)));
      FingerCalibration& c = out.vest[finger_slot(f)];
      c.finger = f;
      c.cci_max = e.at("cci_max").get<double>();
      c.eda_max = e.at("eda_max").get<double>();
      c.validate();
    }
    if (j.contains("emg")) {
      ChannelCalibration e;
      e.e_max = read_array<double, kEmgChannels>(j.at("emg"), "e_max");
      e.validate();
      out.emg = e;
    }
    return out;
  });
}

Json series_point_to_json(const SeriesPoint& p) {
  Json j;
  j["t"] = p.t;
  j["pose"] = p.pose;
  j["cci_norm"] = p.cci_norm;
  j["eda_norm"] = p.eda_norm;
  j["vest_front"] = p.vest_front;
  j["vest_back"] = p.vest_back;
  return j;
}

SeriesPoint series_point_from_json(const Json& j) {
  return guarded("series point", [&] {
    SeriesPoint p;
    p.t = j.at("t").get<double>();
    p.pose = j.at("pose").get<int>();
    p.cci_norm = read_array<double, kFingerCount>(j, "cci_norm");
    p.eda_norm = read_array<double, kFingerCount>(j, "eda_norm");
    p.vest_front = read_array<int, kFingerCount>(j, "vest_front");
    p.vest_back = read_array<int, kFingerCount>(j, "vest_back");
    return p;
  });
}

Json result_to_json(const TrialResult& r, bool with_series) {
  Json j;
  j["object"] = r.object;
  j["condition"] = condition_name(r.condition);
  j["seed"] = r.seed;
  j["success"] = r.success;
  j["completion_time"] = r.completion_time_s;
  j["slip_count"] = r.slip_count;
  j["deformation_count"] = r.deformation_count;
  j["crushed"] = r.crushed;
  j["r_pose_cci"] = optional_number(r.r_pose_cci);
  j["r_pose_eda"] = optional_number(r.r_pose_eda);
  if (with_series) {
    j["series"] = Json::array();
    for (const SeriesPoint& p : r.series) j["series"].push_back(series_point_to_json(p));
  }
  return j;
}

TrialResult result_from_json(const Json& j) {
  return guarded("trial result", [&] {
    TrialResult r;
    r.object = j.at("object").get<std::string>();
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.success = j.at("success").get<bool>();
    r.completion_time_s = j.at("completion_time").get<double>();
    r.slip_count = j.at("slip_count").get<std::int64_t>();
    r.deformation_count = j.at("deformation_count").get<std::int64_t>();
    r.crushed = j.at("crushed").get<bool>();
    r.r_pose_cci = read_optional(j, "r_pose_cci");
    r.r_pose_eda = read_optional(j, "r_pose_eda");
    if (j.contains("series")) {
      for (const Json& p : j.at("series")) r.series.push_back(series_point_from_json(p));
    }
    return r;
  });
}

Json trace_record(const TickRecord& rec) {
  Json j;
  j["t"] = rec.t;
  j["pose"] = rec.pose.fused.external();
  j["forces"] = rec.forces;
  j["height"] = rec.world.height;
  j["held"] = rec.world.held;
  j["slip_events"] = rec.world.slip_events;
  j["deformation_events"] = rec.world.deformation_events;
  Json cci = Json::array();
  Json eda = Json::array();
  Json front = Json::array();
  for (Finger f : kAllFingers) {
    cci.push_back(rec.metrics[finger_slot(f)].cci);
    eda.push_back(rec.metrics[finger_slot(f)].eda);
    front.push_back(rec.vest.front_column(f));
  }
  j["cci"] = cci;
  j["eda"] = eda;
  j["vest_front"] = front;
  j["activation"] = rec.activation;
  return j;
}

Json SessionEncoder::stamp(Json msg) {
  msg["seq"] = ++seq_;
  return msg;
}

Json SessionEncoder::hello(double t, const TrialConfig& config) {
  Json j;
  j["type"] = "hello";
  j["t"] = t;
  j["version"] = version();
  j["object"] = config.object;
  j["condition"] = condition_name(config.condition);
  j["seed"] = config.seed;
  j["dt"] = config.dt_s;
  return stamp(std::move(j));
}

Json SessionEncoder::vest(const VestCommand& v) { return stamp(vest_message(v)); }

Json SessionEncoder::frame_metrics(double t,
                                   const std::array<ContactMetrics, kFingerCount>& metrics) {
  Json j;
  j["type"] = "frame_metrics";
  j["t"] = t;
  j["metrics"] = Json::array();
  for (const ContactMetrics& m : metrics) j["metrics"].push_back(metrics_to_json(m));
  return stamp(std::move(j));
}

Json SessionEncoder::pose(const PoseUpdate& p) { return stamp(pose_message(p)); }

Json SessionEncoder::activation(double t, double value) {
  Json j;
  j["type"] = "activation";
  j["t"] = t;
  j["value"] = value;
  return stamp(std::move(j));
}

Json SessionEncoder::trial_event(double t, const std::string& event) {
  Json j;
  j["type"] = "trial_event";
  j["t"] = t;
  j["event"] = event;
  return stamp(std::move(j));
}

Json SessionEncoder::trial_summary(double t, const TrialResult& result) {
  Json j;
  j["type"] = "trial_summary";
  j["t"] = t;
  j["result"] = result_to_json(result, false);
  return stamp(std::move(j));
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParse, what + ": " + ex.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace tega
