#include "core/emg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace tega {

void EmgConfig::validate() const {
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "EMG sample rate must be positive");
  }
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "EMG cutoff must lie in (0, fs/2)");
  }
  if (filter_order != 4) {
    throw Error(ErrorCode::kInvalidArgument, "EMG filter order is fixed at 4");
  }
  if (block_size == 0) throw Error(ErrorCode::kInvalidArgument, "EMG block size must be >= 1");
}

double FilterDesign::magnitude(double frequency_hz) const {
  const double w = 2.0 * std::numbers::pi * frequency_hz / sample_rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return std::abs(h);
}

FilterDesign design_butterworth(int order, double cutoff_hz, double sample_rate_hz) {
  if (order <= 0 || order % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "Butterworth order must be a positive even number");
  }
  if (!(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "cutoff " + std::to_string(cutoff_hz) + " Hz is not below Nyquist for fs " +
                    std::to_string(sample_rate_hz) + " Hz");
  }
  FilterDesign d;
  d.sample_rate_hz = sample_rate_hz;
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  for (int i = 0; i < order / 2; ++i) {
    // Conjugate analog pole pair at angle (2i + 1) pi / (2 order) off the
    // negative real axis.
    const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
    const double inv_q = 2.0 * std::cos(theta);
    const double norm = 1.0 + inv_q * k + k2;
    Biquad s;
    s.b0 = k2 / norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) / norm;
    s.a2 = (1.0 - inv_q * k + k2) / norm;
    d.sections.push_back(s);
  }
  return d;
}

ButterworthFilter::ButterworthFilter(FilterDesign design)
    : design_(std::move(design)), state_(design_.sections.size(), {0.0, 0.0}) {}

double ButterworthFilter::process(double x) {
  double v = x;
  for (std::size_t i = 0; i < design_.sections.size(); ++i) {
    const Biquad& s = design_.sections[i];
    auto& z = state_[i];
    const double y = s.b0 * v + z[0];
    z[0] = s.b1 * v - s.a1 * y + z[1];
    z[1] = s.b2 * v - s.a2 * y;
    v = y;
  }
  return v;
}

void ButterworthFilter::filter(std::span<const double> in, std::span<double> out) {
  if (out.size() < in.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "filter output buffer too small");
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = process(in[i]);
}

void ButterworthFilter::reset() {
  for (auto& z : state_) z = {0.0, 0.0};
}

double downsample_block(std::span<const double> block) {
  if (block.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot average an empty block");
  double sum = 0.0;
  for (double v : block) sum += v;
  return sum / static_cast<double>(block.size());
}

double calibrate_channel(std::span<const double> block_means) {
  if (block_means.empty()) {
    throw Error(ErrorCode::kCalibration, "EMG calibration needs at least one block");
  }
  return *std::max_element(block_means.begin(), block_means.end());
}

void ChannelCalibration::validate() const {
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    if (!(e_max[c] > 0.0) || !std::isfinite(e_max[c])) {
      throw Error(ErrorCode::kCalibration,
                  "EMG channel " + std::to_string(c + 1) + " maximum must be positive");
    }
  }
}

PoseIndex::PoseIndex(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw Error(ErrorCode::kInvalidArgument,
                "pose index " + std::to_string(value) + " outside [1, 5]");
  }
}

namespace {
// Absorbs the last-bit error of a block mean that should equal its calibrated
// maximum exactly, so full activation still lands on the top level.
constexpr double kQuantizeSlack = 1e-9;
}  // namespace

PoseIndex quantize_pose(double e_bar, double e_max) {
  if (!(e_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "e_max must be positive");
  const double level = std::floor(4.0 * e_bar / e_max + 1.0 + kQuantizeSlack);
  if (!(level >= PoseIndex::kMin)) return PoseIndex(PoseIndex::kMin);
  return PoseIndex(static_cast<int>(std::min<double>(level, PoseIndex::kMax)));
}

PoseIndex fuse_poses(PoseIndex a1, PoseIndex a2, PoseIndex a3) {
  if (a1 == a2 || a1 == a3) return a1;
  if (a2 == a3) return a2;
  return PoseIndex((a1.value() + a2.value() + a3.value()) / 3);
}

namespace {
std::array<ButterworthFilter, kEmgChannels> make_filters(const EmgConfig& config) {
  config.validate();
  const FilterDesign d =
      design_butterworth(config.filter_order, config.cutoff_hz, config.sample_rate_hz);
  return {ButterworthFilter(d), ButterworthFilter(d), ButterworthFilter(d)};
}
}  // namespace

EmgFrontEnd::EmgFrontEnd(EmgConfig config) : config_(config), filters_(make_filters(config)) {}

std::optional<BlockMeans> EmgFrontEnd::push(const EmgSample& sample) {
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    double x = sample.channels[c];
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "non-finite EMG sample");
    if (config_.rectify) x = std::abs(x);
    sums_[c] += filters_[c].process(x);
  }
  if (++filled_ < config_.block_size) return std::nullopt;
  BlockMeans out;
  out.timestamp = sample.timestamp;
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    out.e_bar[c] = sums_[c] / static_cast<double>(config_.block_size);
    sums_[c] = 0.0;
  }
  filled_ = 0;
  return out;
}

void EmgFrontEnd::reset() {
  for (auto& f : filters_) f.reset();
  sums_ = {};
  filled_ = 0;
}

ChannelCalibration calibrate_channels(std::span<const BlockMeans> blocks) {
  if (blocks.empty()) throw Error(ErrorCode::kCalibration, "EMG calibration stream is empty");
  ChannelCalibration out;
  std::vector<double> column(blocks.size());
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    for (std::size_t i = 0; i < blocks.size(); ++i) column[i] = blocks[i].e_bar[c];
    out.e_max[c] = calibrate_channel(column);
  }
  out.validate();
  return out;
}

ChannelCalibration calibrate_channels(std::span<const EmgSample> stream,
                                      const EmgConfig& config) {
  EmgFrontEnd front_end(config);
  std::vector<BlockMeans> blocks;
  for (const EmgSample& s : stream) {
    if (auto b = front_end.push(s)) blocks.push_back(*b);
  }
  return calibrate_channels(blocks);
}

PoseUpdate decode_block(const BlockMeans& block, const ChannelCalibration& calibration) {
  PoseUpdate u;
  u.timestamp = block.timestamp;
  u.e_bar = block.e_bar;
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    u.per_channel[c] = quantize_pose(block.e_bar[c], calibration.e_max[c]);
  }
  u.fused = fuse_poses(u.per_channel[0], u.per_channel[1], u.per_channel[2]);
  return u;
}

EmgPipeline::EmgPipeline(EmgConfig config, ChannelCalibration calibration)
    : front_end_(config), calibration_(calibration) {
  calibration_.validate();
}

std::optional<PoseUpdate> EmgPipeline::push(const EmgSample& sample) {
  auto block = front_end_.push(sample);
  if (!block) return std::nullopt;
  return decode_block(*block, calibration_);
}

}  // namespace tega
