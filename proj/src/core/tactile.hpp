#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "core/common.hpp"

namespace tega {

// Raw fingertip image, row-major RGB triples.
struct TactileFrame {
  Finger finger = Finger::kThumb;
  double timestamp = 0.0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

// Per-channel real image. Used for the resting baseline and for the
// baseline-subtracted difference image.
struct ChannelImage {
  Finger finger = Finger::kThumb;
  double timestamp = 0.0;
  int width = 0;
  int height = 0;
  std::vector<double> rgb;
};

struct BaselineFrame : ChannelImage {};
struct DiffFrame : ChannelImage {};

struct GrayscaleWeights {
  double r = 0.299;
  double g = 0.587;
  double b = 0.114;

  void validate() const;
};

struct PressureMap {
  Finger finger = Finger::kThumb;
  double timestamp = 0.0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};

enum class ThresholdMode {
  // I(centroid) - coeff * spatial spread, as the adaptive threshold is usually
  // written.
  kSpatialSigma,
  // I(centroid) - coeff * standard deviation of the map's intensities.
  kIntensitySpread,
};

struct TactileConfig {
  GrayscaleWeights weights;
  double epsilon_mass = 1e-9;
  double threshold_coeff = 1.28;
  ThresholdMode threshold_mode = ThresholdMode::kSpatialSigma;
  std::size_t baseline_frames = 10;
};

struct ContactMetrics {
  Finger finger = Finger::kThumb;
  double timestamp = 0.0;
  bool contact = false;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  double sigma = 0.0;
  double threshold = 0.0;
  std::int64_t eda = 0;
  double cci = 0.0;

  bool operator==(const ContactMetrics&) const = default;
};

BaselineFrame capture_baseline(std::span<const TactileFrame> frames);
DiffFrame diff_frame(const TactileFrame& frame, const BaselineFrame& baseline);
PressureMap to_pressure_map(const DiffFrame& diff, const GrayscaleWeights& weights);

// Pressure-weighted centroid; nullopt when the total mass is below epsilon_mass.
std::optional<Centroid> compute_centroid(const PressureMap& map,
                                         double epsilon_mass = 1e-9);
double compute_sigma(const PressureMap& map, const Centroid& centroid);
double compute_intensity_spread(const PressureMap& map);
double compute_threshold(const PressureMap& map, const Centroid& centroid,
                         double spread, double coeff = 1.28);
std::int64_t compute_eda(const PressureMap& map, double threshold);
double compute_cci(const PressureMap& map, std::int64_t eda);

ContactMetrics metrics_from_map(const PressureMap& map, const TactileConfig& config);
ContactMetrics extract_metrics(const TactileFrame& frame, const BaselineFrame& baseline,
                               const TactileConfig& config = {});

// Stateful per-finger front end: collects baseline frames, then turns every
// subsequent frame into ContactMetrics.
class TactileProcessor {
 public:
  TactileProcessor(Finger finger, TactileConfig config);

  Finger finger() const { return finger_; }
  const TactileConfig& config() const { return config_; }
  bool has_baseline() const { return baseline_.has_value(); }
  const BaselineFrame& baseline() const;

  // Returns true once enough frames were collected to fix the baseline.
  bool add_baseline_frame(const TactileFrame& frame);
  void set_baseline(BaselineFrame baseline);
  ContactMetrics process(const TactileFrame& frame) const;

 private:
  Finger finger_;
  TactileConfig config_;
  std::vector<TactileFrame> pending_;
  std::optional<BaselineFrame> baseline_;
};

}  // namespace tega
