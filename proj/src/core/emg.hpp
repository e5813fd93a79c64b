#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "core/common.hpp"

namespace tega {

inline constexpr std::size_t kEmgChannels = 3;

struct EmgSample {
  double timestamp = 0.0;
  std::array<double, kEmgChannels> channels{};
};

struct EmgConfig {
  double sample_rate_hz = 1000.0;
  double cutoff_hz = 50.0;
  int filter_order = 4;
  // Samples averaged into one downsampled value (tau).
  std::size_t block_size = 100;
  // Absolute value before filtering; off keeps the raw-envelope path.
  bool rectify = false;

  void validate() const;
  double effective_rate_hz() const {
    return sample_rate_hz / static_cast<double>(block_size);
  }
};

// One second-order section, a0 normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterDesign {
  std::vector<Biquad> sections;
  double sample_rate_hz = 0.0;

  // |H(e^{j 2 pi f / fs})| of the cascade.
  double magnitude(double frequency_hz) const;
};

// Digital Butterworth low-pass via bilinear transform with the cutoff
// prewarped; even orders only, realised as order/2 biquads.
FilterDesign design_butterworth(int order, double cutoff_hz, double sample_rate_hz);

// Cascade of transposed direct-form II biquads with per-section state.
class ButterworthFilter {
 public:
  explicit ButterworthFilter(FilterDesign design);

  double process(double x);
  void filter(std::span<const double> in, std::span<double> out);
  void reset();
  const FilterDesign& design() const { return design_; }

 private:
  FilterDesign design_;
  std::vector<std::array<double, 2>> state_;
};

double downsample_block(std::span<const double> block);

// MVC-style calibration: running maximum of the block means.
double calibrate_channel(std::span<const double> block_means);

struct ChannelCalibration {
  std::array<double, kEmgChannels> e_max{1.0, 1.0, 1.0};

  void validate() const;
  bool operator==(const ChannelCalibration&) const = default;
};

// Grasp pose level. Internally 1..5; external presentation is 0..4.
class PoseIndex {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 5;

  constexpr PoseIndex() = default;
  explicit PoseIndex(int value);
  static PoseIndex from_external(int external) { return PoseIndex(external + 1); }

  constexpr int value() const { return value_; }
  constexpr int external() const { return value_ - 1; }
  auto operator<=>(const PoseIndex&) const = default;

 private:
  int value_ = kMin;
};

// floor(4 * e_bar / e_max + 1) clamped to [1, 5].
PoseIndex quantize_pose(double e_bar, double e_max);

// Majority of the three channel poses, else the floored mean.
PoseIndex fuse_poses(PoseIndex a1, PoseIndex a2, PoseIndex a3);

struct BlockMeans {
  double timestamp = 0.0;
  std::array<double, kEmgChannels> e_bar{};
};

// Filtering and block averaging for all channels.
class EmgFrontEnd {
 public:
  explicit EmgFrontEnd(EmgConfig config);

  // Emits a block once block_size samples have accumulated.
  std::optional<BlockMeans> push(const EmgSample& sample);
  void reset();
  const EmgConfig& config() const { return config_; }

 private:
  EmgConfig config_;
  std::array<ButterworthFilter, kEmgChannels> filters_;
  std::array<double, kEmgChannels> sums_{};
  std::size_t filled_ = 0;
};

ChannelCalibration calibrate_channels(std::span<const BlockMeans> blocks);
ChannelCalibration calibrate_channels(std::span<const EmgSample> stream,
                                      const EmgConfig& config);

struct PoseUpdate {
  double timestamp = 0.0;
  std::array<double, kEmgChannels> e_bar{};
  std::array<PoseIndex, kEmgChannels> per_channel{};
  PoseIndex fused;
};

PoseUpdate decode_block(const BlockMeans& block, const ChannelCalibration& calibration);

// Samples in, fused poses out at sample_rate / block_size.
class EmgPipeline {
 public:
  EmgPipeline(EmgConfig config, ChannelCalibration calibration);

  std::optional<PoseUpdate> push(const EmgSample& sample);
  const ChannelCalibration& calibration() const { return calibration_; }
  const EmgConfig& config() const { return front_end_.config(); }

 private:
  EmgFrontEnd front_end_;
  ChannelCalibration calibration_;
};

}  // namespace tega
