#include "core/haptic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tega {

void FingerCalibration::validate() const {
  if (!(cci_max > 0.0) || !(eda_max > 0.0) || !std::isfinite(cci_max) ||
      !std::isfinite(eda_max)) {
    throw Error(ErrorCode::kCalibration, "calibration maxima for " +
                                             std::string(finger_name(finger)) +
                                             " must be positive");
  }
}

double derive_k(double max_value, double epsilon) {
  if (!(max_value > 0.0) || !std::isfinite(max_value)) {
    throw Error(ErrorCode::kInvalidArgument, "sigmoid calibration maximum must be positive");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "sigmoid epsilon must lie in (0, 0.5)");
  }
  return 2.0 * std::log((1.0 - epsilon) / epsilon) / max_value;
}

SigmoidParams sigmoid_params(const FingerCalibration& calib, double epsilon) {
  calib.validate();
  return {derive_k(calib.cci_max, epsilon), derive_k(calib.eda_max, epsilon), epsilon};
}

double sigmoid_response(double value, double max_value, double k) {
  return 1.0 / (1.0 + std::exp(-k * (value - max_value / 2.0)));
}

int to_intensity(double response) {
  const double scaled = std::floor(100.0 * response + 0.5);
  return static_cast<int>(std::clamp(scaled, 0.0, 100.0));
}

int map_cci_to_intensity(double cci, const FingerCalibration& calib, double epsilon) {
  const double k = derive_k(calib.cci_max, epsilon);
  return to_intensity(sigmoid_response(std::max(0.0, cci), calib.cci_max, k));
}

int map_eda_to_intensity(double eda, const FingerCalibration& calib, double epsilon) {
  const double k = derive_k(calib.eda_max, epsilon);
  return to_intensity(sigmoid_response(std::max(0.0, eda), calib.eda_max, k));
}

double VestCommand::front_mean() const {
  double sum = 0.0;
  for (int v : front) sum += v;
  return sum / static_cast<double>(front.size());
}

VestCommand build_vest_command(std::span<const ContactMetrics> metrics,
                               const VestCalibration& calibration,
                               const HapticConfig& config) {
  std::array<const ContactMetrics*, kFingerCount> by_finger{};
  VestCommand cmd;
  for (const ContactMetrics& m : metrics) {
    const std::size_t slot = finger_slot(m.finger);
    if (by_finger[slot] != nullptr) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate metrics for " + std::string(finger_name(m.finger)));
    }
    by_finger[slot] = &m;
    cmd.timestamp = std::max(cmd.timestamp, m.timestamp);
  }
  for (Finger f : kAllFingers) {
    const std::size_t c = finger_slot(f);
    int front = 0;
    int back = 0;
    const ContactMetrics* m = by_finger[c];
    if (m == nullptr) {
      cmd.degraded = true;
    } else {
      const FingerCalibration& calib = calibration[c];
      const SigmoidParams p = sigmoid_params(calib, config.epsilon);
      const double rf = sigmoid_response(m->cci, calib.cci_max, p.k_cci);
      const double rb = sigmoid_response(static_cast<double>(m->eda), calib.eda_max, p.k_eda);
      cmd.raw_front[c] = 100.0 * rf;
      cmd.raw_back[c] = 100.0 * rb;
      if (m->contact || !config.zero_when_no_contact) {
        front = to_intensity(rf);
        back = to_intensity(rb);
      }
    }
    for (int r = 0; r < kVestRows; ++r) {
      cmd.front[static_cast<std::size_t>(r * kVestColumns) + c] = front;
      cmd.back[static_cast<std::size_t>(r * kVestColumns) + c] = back;
    }
  }
  return cmd;
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of empty sample");
  if (!(p > 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

FingerCalibration calibrate_finger(std::span<const ContactMetrics> stream, Finger finger,
                                   const CalibrationOptions& options) {
  std::vector<double> cci;
  std::vector<double> eda;
  std::optional<double> t0;
  for (const ContactMetrics& m : stream) {
    if (m.finger != finger) continue;
    if (!t0) t0 = m.timestamp;
    if (options.duration && m.timestamp - *t0 > *options.duration) continue;
    if (!m.contact) continue;
    cci.push_back(m.cci);
    eda.push_back(static_cast<double>(m.eda));
  }
  if (cci.empty()) {
    throw Error(ErrorCode::kCalibration,
                "no contact observed for " + std::string(finger_name(finger)));
  }
  FingerCalibration out;
  out.finger = finger;
  if (options.use_percentile) {
    out.cci_max = nearest_rank_percentile(cci, options.percentile);
    out.eda_max = nearest_rank_percentile(eda, options.percentile);
  } else {
    out.cci_max = *std::max_element(cci.begin(), cci.end());
    out.eda_max = *std::max_element(eda.begin(), eda.end());
  }
  out.validate();
  return out;
}

VestCalibration calibrate(std::span<const ContactMetrics> stream,
                          const CalibrationOptions& options) {
  VestCalibration out;
  for (Finger f : kAllFingers) out[finger_slot(f)] = calibrate_finger(stream, f, options);
  return out;
}

}  // namespace tega
