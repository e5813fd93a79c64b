#include "core/grasp_sim.hpp"

#include <algorithm>
#include <cmath>

namespace tega {

void ObjectSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "object needs a name");
  const auto bad = [this](const char* what) {
    return Error(ErrorCode::kInvalidArgument, "object '" + name + "': " + what);
  };
  if (!(mass_kg > 0.0)) throw bad("mass must be positive");
  if (!(stiffness_n_per_mm > 0.0)) throw bad("stiffness must be positive");
  if (!(friction_mu > 0.0 && friction_mu < 2.0)) throw bad("friction must lie in (0, 2)");
  if (!(crush_force_n > 0.0)) throw bad("crush force must be positive");
  if (!(contact_sharpness > 0.0)) throw bad("contact sharpness must be positive");
}

std::vector<ObjectSpec> default_objects() {
  const double rigid = std::numeric_limits<double>::infinity();
  return {
      {"object1", "water bottle, rigid and heavy", 0.5, 20.0, 0.8, rigid, 1.0},
      {"object2", "wet wipes container, medium stiffness", 0.25, 12.0, 0.7, 25.0, 0.7},
      {"object3", "bag of bread, soft and deformable", 0.1, 2.0, 0.5, 6.0, 0.3},
  };
}

const ObjectSpec& find_object(const std::vector<ObjectSpec>& library, const std::string& name) {
  for (const ObjectSpec& o : library) {
    if (o.name == name) return o;
  }
  throw Error(ErrorCode::kUnknownObject, "unknown object '" + name + "'");
}

void PoseForceTable::validate() const {
  if (newtons[0] < 0.0) throw Error(ErrorCode::kInvalidArgument, "pose forces must be >= 0");
  for (std::size_t i = 1; i < newtons.size(); ++i) {
    if (!(newtons[i] > newtons[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "pose force table must be strictly increasing");
    }
  }
}

void WorldConfig::validate() const {
  if (!(gravity > 0.0 && hold_margin >= 0.0 && lift_target_m > 0.0 && lift_speed > 0.0 &&
        slip_speed > 0.0 && deformation_dwell_s >= 0.0 && crush_sustain_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid world configuration");
  }
}

double required_grip(const ObjectSpec& object, const WorldConfig& config) {
  return object.mass_kg * config.gravity * (1.0 + config.hold_margin) / object.friction_mu;
}

GraspState step_world(const GraspState& state, const std::array<double, kFingerCount>& forces,
                      const ObjectSpec& object, const WorldConfig& config, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "time step must be positive");
  GraspState next = state;
  next.time = state.time + dt;
  double total = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < kFingerCount; ++i) {
    next.forces[i] = std::max(0.0, forces[i]);
    total += next.forces[i];
    peak = std::max(peak, next.forces[i]);
  }
  next.held = object.friction_mu * total >=
              object.mass_kg * config.gravity * (1.0 + config.hold_margin);
  if (next.held) {
    next.ever_held = true;
    next.height = std::min(config.lift_target_m, state.height + config.lift_speed * dt);
  } else if (state.height > 0.0) {
    if (state.held) ++next.slip_events;
    next.height = std::max(0.0, state.height - config.slip_speed * dt);
  }

  if (peak > object.crush_force_n) {
    next.over_crush_time = state.over_crush_time + dt;
    // Small tolerance so a dwell that is an exact multiple of dt still counts.
    if (!next.deformation_latched && next.over_crush_time >= config.deformation_dwell_s - 1e-9) {
      ++next.deformation_events;
      next.deformation_latched = true;
    }
    if (next.over_crush_time >= config.crush_sustain_s - 1e-9) next.crushed = true;
  } else {
    next.over_crush_time = 0.0;
    next.deformation_latched = false;
  }
  return next;
}

void RenderConfig::validate() const {
  if (width <= 0 || height <= 0 || width > 1024 || height > 1024) {
    throw Error(ErrorCode::kInvalidArgument, "render size out of range");
  }
  if (!(peak_gain > 0.0 && radius_gain > 0.0 && noise_sd >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid render gains");
  }
}

Rng make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x7e6au};
  return Rng(seq);
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

PixelNoise::PixelNoise() {
  for (std::size_t i = 0; i < kLevels; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(kLevels);
    double lo = -10.0;
    double hi = 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    table_[i] = 0.5 * (lo + hi);
  }
}

const PixelNoise& PixelNoise::instance() {
  static const PixelNoise noise;
  return noise;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// Smooth illumination gradient, slightly different per finger: red and blue
// vary along x, green along y. Integer valued, so sub-half-unit noise never
// changes a resting pixel.
struct RestingImage {
  std::vector<double> red;
  std::vector<double> green;
  std::vector<double> blue;
};

RestingImage resting_image(Finger finger, int w, int h) {
  RestingImage img;
  const double shift = 4.0 * static_cast<double>(finger_slot(finger));
  for (int x = 0; x < w; ++x) {
    const double fx = static_cast<double>(x) / std::max(1, w - 1);
    img.red.push_back(std::round(40.0 + 20.0 * fx + shift));
    img.blue.push_back(std::round(60.0 + 10.0 * (1.0 - fx) - shift));
  }
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / std::max(1, h - 1);
    img.green.push_back(std::round(50.0 + 20.0 * fy));
  }
  return img;
}

}  // namespace

TactileFrame render_baseline(Finger finger, const RenderConfig& config, double timestamp) {
  config.validate();
  TactileFrame f;
  f.finger = finger;
  f.timestamp = timestamp;
  f.width = config.width;
  f.height = config.height;
  f.rgb.resize(3 * f.pixel_count());
  const RestingImage img = resting_image(finger, f.width, f.height);
  std::size_t i = 0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      f.rgb[i++] = to_byte(img.red[static_cast<std::size_t>(x)]);
      f.rgb[i++] = to_byte(img.green[static_cast<std::size_t>(y)]);
      f.rgb[i++] = to_byte(img.blue[static_cast<std::size_t>(x)]);
    }
  }
  return f;
}

TactileFrame render_tactile(Finger finger, double force_n, const ObjectSpec& object,
                            const RenderConfig& config, Rng& rng, double timestamp) {
  config.validate();
  const double force = std::max(0.0, force_n);
  const double peak = config.peak_gain * force * object.contact_sharpness;
  const double radius = config.radius_gain * std::sqrt(force / object.stiffness_n_per_mm);
  const double cx = static_cast<double>(config.width / 2);
  const double cy = static_cast<double>(config.height / 2);
  const double inv_two_r2 = radius > 0.0 ? 1.0 / (2.0 * radius * radius) : 0.0;

  // The Gaussian blob is separable: exp(-(dx^2 + dy^2) k) = ex[x] * ey[y].
  std::vector<double> ex(static_cast<std::size_t>(config.width), 0.0);
  std::vector<double> ey(static_cast<std::size_t>(config.height), 0.0);
  if (peak > 0.0) {
    for (int x = 0; x < config.width; ++x) {
      ex[static_cast<std::size_t>(x)] = std::exp(-(x - cx) * (x - cx) * inv_two_r2);
    }
    for (int y = 0; y < config.height; ++y) {
      ey[static_cast<std::size_t>(y)] = peak * std::exp(-(y - cy) * (y - cy) * inv_two_r2);
    }
  }

  TactileFrame f;
  f.finger = finger;
  f.timestamp = timestamp;
  f.width = config.width;
  f.height = config.height;
  f.rgb.resize(3 * f.pixel_count());
  const RestingImage img = resting_image(finger, f.width, f.height);
  const PixelNoise& noise = PixelNoise::instance();
  // Five 12-bit noise indices per 64-bit draw.
  std::uint64_t bits = 0;
  int left = 0;
  std::size_t i = 0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double blob = ey[static_cast<std::size_t>(y)] * ex[static_cast<std::size_t>(x)];
      const std::array<double, 3> base = {img.red[static_cast<std::size_t>(x)],
                                          img.green[static_cast<std::size_t>(y)],
                                          img.blue[static_cast<std::size_t>(x)]};
      for (std::size_t c = 0; c < 3; ++c) {
        double v = base[c] + config.channel_gain[c] * blob;
        if (config.noise_sd > 0.0) {
          if (left == 0) {
            bits = rng();
            left = 5;
          }
          v += config.noise_sd * noise.at(bits & 0xfff);
          bits >>= 12;
          --left;
        }
        f.rgb[i++] = to_byte(v);
      }
    }
  }
  return f;
}

void EmgSynthConfig::validate() const {
  if (!(envelope_scale_mv > 0.0 && noise_sd >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid EMG synthesis parameters");
  }
  for (double g : channel_gain) {
    if (!(g > 0.0)) throw Error(ErrorCode::kInvalidArgument, "EMG channel gains must be > 0");
  }
}

std::vector<EmgSample> synth_emg(double activation, double t0, double dt,
                                 const EmgSynthConfig& synth, const EmgConfig& emg, Rng& rng) {
  if (!(activation >= 0.0 && activation <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "activation must lie in [0, 1]");
  }
  const auto n = static_cast<std::size_t>(std::llround(dt * emg.sample_rate_hz));
  std::vector<EmgSample> out(n);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    out[k].timestamp = t0 + static_cast<double>(k + 1) / emg.sample_rate_hz;
    for (std::size_t c = 0; c < kEmgChannels; ++c) {
      double gain = 1.0;
      if (synth.noise_sd > 0.0) gain += synth.noise_sd * noise(rng);
      out[k].channels[c] =
          std::max(0.0, activation * synth.envelope_scale_mv * synth.channel_gain[c] * gain);
    }
  }
  return out;
}

std::string_view operator_mode_name(OperatorMode mode) {
  switch (mode) {
    case OperatorMode::kClosedLoop:
      return "closed_loop";
    case OperatorMode::kOpenLoop:
      return "open_loop";
    case OperatorMode::kManual:
      return "manual";
  }
  return "closed_loop";
}

OperatorMode parse_operator_mode(std::string_view name) {
  if (name == "closed_loop") return OperatorMode::kClosedLoop;
  if (name == "open_loop") return OperatorMode::kOpenLoop;
  if (name == "manual") return OperatorMode::kManual;
  throw Error(ErrorCode::kParse, "unknown operator mode '" + std::string(name) + "'");
}

void OperatorModel::validate() const {
  if (!(gain >= 0.0 && reaction_delay_s >= 0.0 && noise_sd >= 0.0 && noise_tau_s > 0.0 &&
        deadband >= 0.0 && plan_sd >= 0.0 && ramp_time_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid operator model");
  }
  if (!(target_intensity >= 0.0 && target_intensity <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "operator target must lie in [0, 100]");
  }
}

double closed_loop_update(const OperatorModel& model, double perceived_front,
                          double activation) {
  const double error = model.target_intensity - perceived_front;
  if (std::abs(error) <= model.deadband) return activation;
  return std::clamp(activation + model.gain * error / 100.0, 0.0, 1.0);
}

Operator::Operator(OperatorModel model, double dt, Rng rng)
    : model_(model), dt_(dt), rng_(std::move(rng)) {
  model_.validate();
  if (!(dt_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "operator dt must be positive");
  delay_ticks_ = static_cast<std::size_t>(std::llround(model_.reaction_delay_s / dt_));
  // Drawn unconditionally so every mode consumes the stream identically.
  const double plan_draw = standard_normal(rng_);
  plan_level_ = std::clamp(model_.plan_mean + model_.plan_sd * plan_draw, 0.0, 1.0);
}

void Operator::post_manual(double activation) {
  mailbox_.store(std::clamp(activation, 0.0, 1.0));
}

double Operator::step(std::optional<double> perceived_front) {
  elapsed_ += dt_;
  const double decay = std::exp(-dt_ / model_.noise_tau_s);
  const double drive = standard_normal(rng_);
  motor_noise_ = decay * motor_noise_ + model_.noise_sd * std::sqrt(1.0 - decay * decay) * drive;

  percepts_.push_back(perceived_front);
  std::optional<double> delayed;
  if (percepts_.size() > delay_ticks_) {
    delayed = percepts_.front();
    percepts_.pop_front();
  }

  switch (model_.mode) {
    case OperatorMode::kClosedLoop:
      if (delayed) intended_ = closed_loop_update(model_, *delayed, intended_);
      break;
    case OperatorMode::kOpenLoop: {
      const double ramp =
          model_.ramp_time_s > 0.0 ? std::min(1.0, elapsed_ / model_.ramp_time_s) : 1.0;
      intended_ = plan_level_ * ramp;
      break;
    }
    case OperatorMode::kManual: {
      const double posted = mailbox_.exchange(-1.0);
      if (posted >= 0.0) intended_ = posted;
      // Manual input is used verbatim.
      return intended_;
    }
  }
  return std::clamp(intended_ + motor_noise_, 0.0, 1.0);
}

}  // namespace tega
