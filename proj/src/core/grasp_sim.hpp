#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core/emg.hpp"
#include "core/tactile.hpp"

namespace tega {

struct ObjectSpec {
  std::string name;
  std::string description;
  double mass_kg = 0.5;
  double stiffness_n_per_mm = 10.0;
  double friction_mu = 0.8;
  // Per-finger normal force above which the object deforms; infinity = rigid.
  double crush_force_n = std::numeric_limits<double>::infinity();
  // Scales the peak of the rendered contact blob.
  double contact_sharpness = 1.0;

  void validate() const;
  bool operator==(const ObjectSpec&) const = default;
};

// The three test objects: rigid heavy bottle, medium container, soft bread bag.
std::vector<ObjectSpec> default_objects();
const ObjectSpec& find_object(const std::vector<ObjectSpec>& library, const std::string& name);

// Per-finger normal force for each pose level 1..5.
struct PoseForceTable {
  std::array<double, 5> newtons{0.0, 2.0, 5.0, 10.0, 18.0};

  void validate() const;
  double force(PoseIndex pose) const { return newtons[static_cast<std::size_t>(pose.value() - 1)]; }
};

struct WorldConfig {
  double gravity = 9.81;
  // Grip must exceed the weight by this fraction to hold.
  double hold_margin = 0.2;
  double lift_target_m = 0.2;
  double lift_speed = 0.1;
  // Descent speed of an airborne object that is not held.
  double slip_speed = 0.5;
  double deformation_dwell_s = 0.2;
  double crush_sustain_s = 1.0;

  void validate() const;
};

struct GraspState {
  double time = 0.0;
  std::array<double, kFingerCount> forces{};
  double height = 0.0;
  bool held = false;
  bool ever_held = false;
  std::int64_t slip_events = 0;
  std::int64_t deformation_events = 0;
  bool crushed = false;
  double over_crush_time = 0.0;
  bool deformation_latched = false;
};

// Quasi-static grasp step: Coulomb hold check, lift while held, slide down
// while airborne and not held, over-compression tracking.
GraspState step_world(const GraspState& state, const std::array<double, kFingerCount>& forces,
                      const ObjectSpec& object, const WorldConfig& config, double dt);

// Smallest total normal force that holds the object.
double required_grip(const ObjectSpec& object, const WorldConfig& config);

struct RenderConfig {
  int width = 32;
  int height = 32;
  // Blob peak in intensity units per newton at sharpness 1.
  double peak_gain = 9.0;
  // Blob radius (pixels) per sqrt(N / (N/mm)).
  double radius_gain = 2.0;
  double noise_sd = 0.05;
  std::array<double, 3> channel_gain{1.05, 1.0, 0.9};

  void validate() const;
};

// Deterministic engine; std::mt19937_64 is fully specified.
using Rng = std::mt19937_64;

enum class RngStream : std::uint64_t {
  kBaseline = 1,
  kVestCalibration = 2,
  kEmgCalibration = 3,
  kOperator = 4,
  kEmg = 5,
  kTactile = 6,
};

// Independent stream per (seed, purpose).
Rng make_rng(std::uint64_t seed, RngStream stream);

double standard_normal(Rng& rng);

// Tabulated inverse-CDF sampler for bulk pixel noise: 4096 equiprobable
// standard-normal quantiles indexed by 12 random bits.
class PixelNoise {
 public:
  static constexpr std::size_t kLevels = 4096;
  static const PixelNoise& instance();
  double sample(Rng& rng) const { return table_[rng() >> 52]; }
  double at(std::size_t index) const { return table_[index % kLevels]; }

 private:
  PixelNoise();
  std::array<double, kLevels> table_{};
};

// Resting gel image of one fingertip.
TactileFrame render_baseline(Finger finger, const RenderConfig& config, double timestamp);

// Resting image plus a Gaussian contact blob whose peak grows with
// force * sharpness and whose radius grows with sqrt(force / stiffness).
TactileFrame render_tactile(Finger finger, double force_n, const ObjectSpec& object,
                            const RenderConfig& config, Rng& rng, double timestamp);

struct EmgSynthConfig {
  double envelope_scale_mv = 1.0;
  // Fixed per-channel gain offsets (about +-5%) so channels disagree near
  // level boundaries.
  std::array<double, kEmgChannels> channel_gain{1.0, 0.95, 1.05};
  double noise_sd = 0.1;

  void validate() const;
};

// Non-negative envelope samples for one tick of length dt at the EMG rate.
std::vector<EmgSample> synth_emg(double activation, double t0, double dt,
                                 const EmgSynthConfig& synth, const EmgConfig& emg, Rng& rng);

enum class OperatorMode { kClosedLoop, kOpenLoop, kManual };

std::string_view operator_mode_name(OperatorMode mode);
OperatorMode parse_operator_mode(std::string_view name);

struct OperatorModel {
  OperatorMode mode = OperatorMode::kClosedLoop;
  // Activation change per tick for a full-scale intensity error.
  double gain = 0.008;
  double reaction_delay_s = 0.2;
  // Stationary standard deviation and correlation time of motor noise.
  double noise_sd = 0.1;
  double noise_tau_s = 1.0;
  double target_intensity = 28.0;
  // Errors within this band are not corrected.
  double deadband = 10.0;
  // Open-loop plan: ramp to a level drawn once per trial.
  double plan_mean = 0.45;
  double plan_sd = 0.2;
  double ramp_time_s = 1.0;

  void validate() const;
};

// One proportional correction of the intended activation; no noise, no delay.
double closed_loop_update(const OperatorModel& model, double perceived_front,
                          double activation);

// Modelled operator. Percepts arrive every tick (or never, without the vest)
// and act after the reaction delay; manual mode reads a mailbox instead.
class Operator {
 public:
  Operator(OperatorModel model, double dt, Rng rng);

  // Returns the activation for this tick.
  double step(std::optional<double> perceived_front);
  // Manual mode: latest value wins, consumed on the next tick.
  void post_manual(double activation);

  double intended() const { return intended_; }
  double planned_level() const { return plan_level_; }
  const OperatorModel& model() const { return model_; }

 private:
  OperatorModel model_;
  double dt_;
  Rng rng_;
  double intended_ = 0.0;
  double motor_noise_ = 0.0;
  double plan_level_ = 0.0;
  double elapsed_ = 0.0;
  std::size_t delay_ticks_ = 0;
  std::deque<std::optional<double>> percepts_;
  std::atomic<double> mailbox_{-1.0};
};

}  // namespace tega
