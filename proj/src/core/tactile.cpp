#include "core/tactile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tega {

namespace {

void check_same_shape(const TactileFrame& frame, const ChannelImage& image,
                      const char* what) {
  if (frame.width != image.width || frame.height != image.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": frame is " + std::to_string(frame.width) + "x" +
                    std::to_string(frame.height) + ", baseline is " +
                    std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  if (frame.finger != image.finger) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": finger mismatch (" +
                    std::string(finger_name(frame.finger)) + " vs " +
                    std::string(finger_name(image.finger)) + ")");
  }
}

void check_frame(const TactileFrame& frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "tactile frame has empty dimensions");
  }
  if (frame.rgb.size() != 3 * frame.pixel_count()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "tactile frame holds " + std::to_string(frame.rgb.size()) +
                    " bytes, expected " + std::to_string(3 * frame.pixel_count()));
  }
}

}  // namespace

void GrayscaleWeights::validate() const {
  if (!(r >= 0.0 && g >= 0.0 && b >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "grayscale weights must be non-negative");
  }
  if (std::abs(r + g + b - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "grayscale weights must sum to 1");
  }
}

BaselineFrame capture_baseline(std::span<const TactileFrame> frames) {
  if (frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "baseline needs at least one frame");
  }
  const TactileFrame& first = frames.front();
  check_frame(first);
  BaselineFrame out;
  out.finger = first.finger;
  out.timestamp = first.timestamp;
  out.width = first.width;
  out.height = first.height;
  out.rgb.assign(first.rgb.size(), 0.0);
  for (const TactileFrame& f : frames) {
    check_frame(f);
    check_same_shape(f, out, "capture_baseline");
    for (std::size_t i = 0; i < f.rgb.size(); ++i) out.rgb[i] += f.rgb[i];
  }
  const double n = static_cast<double>(frames.size());
  for (double& v : out.rgb) v /= n;
  return out;
}

DiffFrame diff_frame(const TactileFrame& frame, const BaselineFrame& baseline) {
  check_frame(frame);
  check_same_shape(frame, baseline, "diff_frame");
  if (baseline.rgb.size() != frame.rgb.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "baseline buffer size mismatch");
  }
  DiffFrame out;
  out.finger = frame.finger;
  out.timestamp = frame.timestamp;
  out.width = frame.width;
  out.height = frame.height;
  out.rgb.resize(frame.rgb.size());
  for (std::size_t i = 0; i < frame.rgb.size(); ++i) {
    out.rgb[i] = std::max(0.0, static_cast<double>(frame.rgb[i]) - baseline.rgb[i]);
  }
  return out;
}

PressureMap to_pressure_map(const DiffFrame& diff, const GrayscaleWeights& weights) {
  weights.validate();
  PressureMap map;
  map.finger = diff.finger;
  map.timestamp = diff.timestamp;
  map.width = diff.width;
  map.height = diff.height;
  const std::size_t n = diff.rgb.size() / 3;
  map.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    map.values[i] = weights.r * diff.rgb[3 * i] + weights.g * diff.rgb[3 * i + 1] +
                    weights.b * diff.rgb[3 * i + 2];
  }
  return map;
}

std::optional<Centroid> compute_centroid(const PressureMap& map, double epsilon_mass) {
  double mass = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const double v = map.at(x, y);
      mass += v;
      sx += x * v;
      sy += y * v;
    }
  }
  if (mass < epsilon_mass) return std::nullopt;
  return Centroid{sx / mass, sy / mass};
}

double compute_sigma(const PressureMap& map, const Centroid& centroid) {
  double mass = 0.0;
  double moment = 0.0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const double v = map.at(x, y);
      const double dx = x - centroid.x;
      const double dy = y - centroid.y;
      mass += v;
      moment += (dx * dx + dy * dy) * v;
    }
  }
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::kNoContact, "spread is undefined for a map without contact");
  }
  return std::sqrt(moment / mass);
}

double compute_intensity_spread(const PressureMap& map) {
  if (map.values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : map.values) mean += v;
  mean /= static_cast<double>(map.values.size());
  double var = 0.0;
  for (double v : map.values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(map.values.size()));
}

double compute_threshold(const PressureMap& map, const Centroid& centroid, double spread,
                         double coeff) {
  if (map.width <= 0 || map.height <= 0) {
    throw Error(ErrorCode::kNoContact, "threshold is undefined on an empty map");
  }
  // Nearest pixel, half-up, kept inside the image.
  const int px = std::clamp(static_cast<int>(std::floor(centroid.x + 0.5)), 0, map.width - 1);
  const int py = std::clamp(static_cast<int>(std::floor(centroid.y + 0.5)), 0, map.height - 1);
  return std::max(0.0, map.at(px, py) - coeff * spread);
}

std::int64_t compute_eda(const PressureMap& map, double threshold) {
  return std::count_if(map.values.begin(), map.values.end(),
                       [threshold](double v) { return v >= threshold; });
}

double compute_cci(const PressureMap& map, std::int64_t eda) {
  if (eda <= 0 || map.values.empty()) return 0.0;
  const double peak = *std::max_element(map.values.begin(), map.values.end());
  return peak / static_cast<double>(eda);
}

ContactMetrics metrics_from_map(const PressureMap& map, const TactileConfig& config) {
  ContactMetrics m;
  m.finger = map.finger;
  m.timestamp = map.timestamp;
  const std::optional<Centroid> c = compute_centroid(map, config.epsilon_mass);
  if (!c) return m;
  m.contact = true;
  m.centroid_x = c->x;
  m.centroid_y = c->y;
  m.sigma = compute_sigma(map, *c);
  const double spread = config.threshold_mode == ThresholdMode::kSpatialSigma
                            ? m.sigma
                            : compute_intensity_spread(map);
  m.threshold = compute_threshold(map, *c, spread, config.threshold_coeff);
  m.eda = compute_eda(map, m.threshold);
  m.cci = compute_cci(map, m.eda);
  return m;
}

ContactMetrics extract_metrics(const TactileFrame& frame, const BaselineFrame& baseline,
                               const TactileConfig& config) {
  return metrics_from_map(to_pressure_map(diff_frame(frame, baseline), config.weights),
                          config);
}

TactileProcessor::TactileProcessor(Finger finger, TactileConfig config)
    : finger_(finger), config_(config) {
  config_.weights.validate();
  if (config_.baseline_frames == 0) {
    throw Error(ErrorCode::kInvalidArgument, "baseline frame count must be positive");
  }
}

const BaselineFrame& TactileProcessor::baseline() const {
  if (!baseline_) throw Error(ErrorCode::kInvalidArgument, "baseline not captured yet");
  return *baseline_;
}

bool TactileProcessor::add_baseline_frame(const TactileFrame& frame) {
  if (frame.finger != finger_) {
    throw Error(ErrorCode::kDimensionMismatch, "baseline frame belongs to another finger");
  }
  if (baseline_) return true;
  check_frame(frame);
  if (!pending_.empty() && (frame.width != pending_.front().width ||
                            frame.height != pending_.front().height)) {
    throw Error(ErrorCode::kDimensionMismatch, "baseline frames differ in size");
  }
  pending_.push_back(frame);
  if (pending_.size() < config_.baseline_frames) return false;
  baseline_ = capture_baseline(pending_);
  pending_.clear();
  return true;
}

void TactileProcessor::set_baseline(BaselineFrame baseline) {
  if (baseline.finger != finger_) {
    throw Error(ErrorCode::kDimensionMismatch, "baseline belongs to another finger");
  }
  baseline_ = std::move(baseline);
  pending_.clear();
}

ContactMetrics TactileProcessor::process(const TactileFrame& frame) const {
  return extract_metrics(frame, baseline(), config_);
}

}  // namespace tega
