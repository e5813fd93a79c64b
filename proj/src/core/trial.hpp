#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/emg.hpp"
#include "core/frame_io.hpp"
#include "core/grasp_sim.hpp"
#include "core/haptic.hpp"
#include "core/tactile.hpp"

namespace tega {

enum class Condition { kHaptic, kNonHaptic, kManual };

std::string_view condition_name(Condition c);
Condition parse_condition(std::string_view name);

struct TrialConfig {
  std::string object = "object1";
  Condition condition = Condition::kHaptic;
  std::uint64_t seed = 1;
  double time_limit_s = 15.0;
  double dt_s = 0.01;
  // Continuous hold at the lift target that counts as a stable lift.
  double stable_hold_s = 0.5;

  OperatorModel operator_model;
  TactileConfig tactile;
  HapticConfig haptic;
  CalibrationOptions vest_calibration;
  int calibration_frames_per_level = 5;
  double emg_calibration_s = 2.0;
  EmgConfig emg;
  EmgSynthConfig emg_synth;
  RenderConfig render;
  WorldConfig world;
  PoseForceTable pose_forces;
  std::vector<ObjectSpec> objects = default_objects();

  void validate() const;
  std::int64_t tick_limit() const;
};

struct TickRecord {
  std::int64_t tick = 0;
  double t = 0.0;
  double activation = 0.0;
  bool pose_updated = false;
  PoseUpdate pose;
  std::array<double, kFingerCount> forces{};
  GraspState world;
  std::array<ContactMetrics, kFingerCount> metrics{};
  VestCommand vest;
  bool slip_event = false;
  bool deformation_event = false;
  bool success_event = false;
};

// Time series sample with CCI/EDA scaled by the calibration maxima into [0, 1].
struct SeriesPoint {
  double t = 0.0;
  int pose = 0;  // external 0..4
  std::array<double, kFingerCount> cci_norm{};
  std::array<double, kFingerCount> eda_norm{};
  std::array<int, kFingerCount> vest_front{};
  std::array<int, kFingerCount> vest_back{};

  double mean_cci() const;
  double mean_eda() const;
  bool operator==(const SeriesPoint&) const = default;
};

struct TrialResult {
  std::string object;
  Condition condition = Condition::kHaptic;
  std::uint64_t seed = 0;
  bool success = false;
  double completion_time_s = 0.0;
  std::int64_t slip_count = 0;
  std::int64_t deformation_count = 0;
  bool crushed = false;
  std::optional<double> r_pose_cci;
  std::optional<double> r_pose_eda;
  std::vector<SeriesPoint> series;

  bool operator==(const TrialResult&) const = default;
};

// Sample Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

using FrameSink = std::function<void(const TactileFrame&, FrameKind)>;

// One closed-loop trial: operator -> EMG -> pose -> grip force -> world ->
// tactile frames -> metrics -> vest -> operator.
class Trial {
 public:
  explicit Trial(TrialConfig config, FrameSink sink = {});

  const TickRecord& step();
  bool done() const { return done_; }
  const TickRecord& last() const { return last_; }
  TrialResult result() const;

  // Manual condition only; applied on the next tick.
  void post_activation(double activation);

  const TrialConfig& config() const { return config_; }
  const ObjectSpec& object() const { return object_; }
  const VestCalibration& vest_calibration() const { return vest_calibration_; }
  const ChannelCalibration& emg_calibration() const { return emg_calibration_; }

 private:
  void calibrate();

  TrialConfig config_;
  ObjectSpec object_;
  FrameSink sink_;
  std::vector<TactileProcessor> processors_;
  VestCalibration vest_calibration_{};
  ChannelCalibration emg_calibration_;
  std::unique_ptr<Operator> operator_;
  std::unique_ptr<EmgPipeline> emg_;
  Rng emg_rng_;
  Rng tactile_rng_;

  GraspState world_;
  PoseUpdate pose_;
  std::optional<VestCommand> last_vest_;
  TickRecord last_;
  std::int64_t tick_ = 0;
  double stable_time_ = 0.0;
  bool done_ = false;
  bool success_ = false;
  double completion_time_ = 0.0;
  std::vector<SeriesPoint> series_;
};

TrialResult run_trial(const TrialConfig& config, FrameSink sink = {},
                      const std::function<void(const Trial&, const TickRecord&)>& on_tick = {});

// Calibration sweep: metrics of frames rendered at every gripping pose level.
std::vector<ContactMetrics> calibration_sweep(const TrialConfig& config, const ObjectSpec& object,
                                              const std::vector<TactileProcessor>& processors,
                                              Rng& rng);

}  // namespace tega
