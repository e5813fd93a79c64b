#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "core/tactile.hpp"

namespace tega {

struct FingerCalibration {
  Finger finger = Finger::kThumb;
  double cci_max = 1.0;
  double eda_max = 1.0;

  void validate() const;
  bool operator==(const FingerCalibration&) const = default;
};

using VestCalibration = std::array<FingerCalibration, kFingerCount>;

// Slope that puts the logistic curve at epsilon for 0 and 1 - epsilon at
// max_value: k = 2 ln((1 - eps) / eps) / max_value.
double derive_k(double max_value, double epsilon = 0.01);

struct SigmoidParams {
  double k_cci = 0.0;
  double k_eda = 0.0;
  double epsilon = 0.01;
};
SigmoidParams sigmoid_params(const FingerCalibration& calib, double epsilon = 0.01);

// Logistic centred on max_value / 2, in [0, 1].
double sigmoid_response(double value, double max_value, double k);

// 100 * response rounded half-up into [0, 100].
int to_intensity(double response);

int map_cci_to_intensity(double cci, const FingerCalibration& calib, double epsilon = 0.01);
int map_eda_to_intensity(double eda, const FingerCalibration& calib, double epsilon = 0.01);

struct HapticConfig {
  double epsilon = 0.01;
  // Silence a finger's columns while it has no contact instead of emitting the
  // logistic floor.
  bool zero_when_no_contact = true;
};

inline constexpr int kVestRows = 4;
inline constexpr int kVestColumns = 4;
inline constexpr int kVestUnitsPerSide = kVestRows * kVestColumns;

// Two 4x4 grids, row-major; column c drives finger c (thumb, index, middle,
// ring from left to right). Front encodes CCI, back encodes EDA.
struct VestCommand {
  double timestamp = 0.0;
  std::array<int, kVestUnitsPerSide> front{};
  std::array<int, kVestUnitsPerSide> back{};
  // Unsuppressed logistic outputs (0-100 scale) per finger, kept for logs.
  std::array<double, kFingerCount> raw_front{};
  std::array<double, kFingerCount> raw_back{};
  bool degraded = false;

  int front_column(Finger f) const { return front[finger_slot(f)]; }
  int back_column(Finger f) const { return back[finger_slot(f)]; }
  // Mean intensity over the 16 front units.
  double front_mean() const;
  bool operator==(const VestCommand&) const = default;
};

VestCommand build_vest_command(std::span<const ContactMetrics> metrics,
                               const VestCalibration& calibration,
                               const HapticConfig& config = {});

struct CalibrationOptions {
  bool use_percentile = false;
  double percentile = 99.0;
  // Only frames within this many seconds of the first one count.
  std::optional<double> duration;
};

// Nearest-rank percentile (p in (0, 100]) of a non-empty sample.
double nearest_rank_percentile(std::vector<double> values, double p);

FingerCalibration calibrate_finger(std::span<const ContactMetrics> stream, Finger finger,
                                   const CalibrationOptions& options = {});
VestCalibration calibrate(std::span<const ContactMetrics> stream,
                          const CalibrationOptions& options = {});

}  // namespace tega
