#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/emg.hpp"
#include "core/haptic.hpp"
#include "core/tactile.hpp"
#include "core/trial.hpp"

namespace tega {

using Json = nlohmann::ordered_json;

inline constexpr int kCalibrationSchemaVersion = 1;

// {finger, t, contact, mu_x, mu_y, sigma, threshold, eda, cci}
Json metrics_to_json(const ContactMetrics& m);
ContactMetrics metrics_from_json(const Json& j);

// {type:"vest", t, front:[16], back:[16]}
Json vest_message(const VestCommand& vest);
VestCommand vest_from_message(const Json& j);

// {type:"pose", t, per_channel:[3], fused}, poses in external 0..4 form.
Json pose_message(const PoseUpdate& pose);

// {type:"emg", t, channels:[3]}
Json emg_message(const EmgSample& sample);
EmgSample emg_from_message(const Json& j);

// CSV with columns t, ch1, ch2, ch3; a header line is optional.
std::vector<EmgSample> read_emg_csv(std::istream& in);
std::vector<EmgSample> read_emg_csv(const std::filesystem::path& path);

// {schema_version, thumb:{cci_max, eda_max}, ..., emg:{e_max:[3]}}
struct CalibrationFile {
  VestCalibration vest{};
  std::optional<ChannelCalibration> emg;

  bool operator==(const CalibrationFile&) const = default;
};
Json calibration_to_json(const CalibrationFile& calib);
CalibrationFile calibration_from_json(const Json& j);

Json series_point_to_json(const SeriesPoint& p);
SeriesPoint series_point_from_json(const Json& j);

Json result_to_json(const TrialResult& r, bool with_series);
TrialResult result_from_json(const Json& j);

// Per-tick trace record.
Json trace_record(const TickRecord& rec);

// Stamps outgoing session messages with a strictly increasing sequence number.
class SessionEncoder {
 public:
  Json hello(double t, const TrialConfig& config);
  Json vest(const VestCommand& vest);
  Json frame_metrics(double t, const std::array<ContactMetrics, kFingerCount>& metrics);
  Json pose(const PoseUpdate& pose);
  Json activation(double t, double value);
  Json trial_event(double t, const std::string& event);
  Json trial_summary(double t, const TrialResult& result);

  std::uint64_t last_seq() const { return seq_; }

 private:
  Json stamp(Json msg);
  std::uint64_t seq_ = 0;
};

Json parse_json(const std::string& text, const std::string& what);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace tega
