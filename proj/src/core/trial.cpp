#include "core/trial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tega {

std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::kHaptic:
      return "haptic";
    case Condition::kNonHaptic:
      return "non_haptic";
    case Condition::kManual:
      return "manual";
  }
  return "haptic";
}

Condition parse_condition(std::string_view name) {
  if (name == "haptic") return Condition::kHaptic;
  if (name == "non_haptic") return Condition::kNonHaptic;
  if (name == "manual") return Condition::kManual;
  throw Error(ErrorCode::kParse, "unknown condition '" + std::string(name) + "'");
}

void TrialConfig::validate() const {
  if (!(time_limit_s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "time limit must be > 0");
  if (!(dt_s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt must be > 0");
  if (!(stable_hold_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "stable hold duration must be >= 0");
  }
  if (calibration_frames_per_level < 1 || !(emg_calibration_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "calibration durations must be positive");
  }
  if (emg_calibration_s < 0.5) {
    throw Error(ErrorCode::kInvalidArgument, "EMG calibration must last at least 0.5 s");
  }
  const double samples = dt_s * emg.sample_rate_hz;
  if (std::abs(samples - std::round(samples)) > 1e-9 || samples < 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "dt must span a whole number of EMG samples");
  }
  operator_model.validate();
  tactile.weights.validate();
  emg.validate();
  emg_synth.validate();
  render.validate();
  world.validate();
  pose_forces.validate();
  for (const ObjectSpec& o : objects) o.validate();
  find_object(objects, object);
}

std::int64_t TrialConfig::tick_limit() const {
  return static_cast<std::int64_t>(std::llround(time_limit_s / dt_s));
}

double SeriesPoint::mean_cci() const {
  return std::accumulate(cci_norm.begin(), cci_norm.end(), 0.0) / kFingerCount;
}

double SeriesPoint::mean_eda() const {
  return std::accumulate(eda_norm.begin(), eda_norm.end(), 0.0) / kFingerCount;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pearson: series lengths differ");
  }
  if (x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "pearson: need >= 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<ContactMetrics> calibration_sweep(const TrialConfig& config, const ObjectSpec& object,
                                              const std::vector<TactileProcessor>& processors,
                                              Rng& rng) {
  std::vector<ContactMetrics> stream;
  double t = 0.0;
  for (int level = PoseIndex::kMin + 1; level <= PoseIndex::kMax; ++level) {
    const double force = config.pose_forces.force(PoseIndex(level));
    for (int k = 0; k < config.calibration_frames_per_level; ++k) {
      for (const TactileProcessor& p : processors) {
        const TactileFrame frame = render_tactile(p.finger(), force, object, config.render, rng, t);
        stream.push_back(p.process(frame));
      }
      t += config.dt_s;
    }
  }
  return stream;
}

namespace {

constexpr double kEmgSettle_s = 0.25;

OperatorModel operator_for(const TrialConfig& config) {
  OperatorModel m = config.operator_model;
  switch (config.condition) {
    case Condition::kHaptic:
      m.mode = OperatorMode::kClosedLoop;
      break;
    case Condition::kNonHaptic:
      m.mode = OperatorMode::kOpenLoop;
      break;
    case Condition::kManual:
      m.mode = OperatorMode::kManual;
      break;
  }
  return m;
}

}  // namespace

Trial::Trial(TrialConfig config, FrameSink sink)
    : config_(std::move(config)),
      sink_(std::move(sink)),
      emg_rng_(make_rng(config_.seed, RngStream::kEmg)),
      tactile_rng_(make_rng(config_.seed, RngStream::kTactile)) {
  config_.validate();
  object_ = find_object(config_.objects, config_.object);
  calibrate();
  operator_ = std::make_unique<Operator>(operator_for(config_), config_.dt_s,
                                         make_rng(config_.seed, RngStream::kOperator));
  emg_ = std::make_unique<EmgPipeline>(config_.emg, emg_calibration_);
}

void Trial::calibrate() {
  // Resting frames before any contact fix each finger's baseline.
  Rng baseline_rng = make_rng(config_.seed, RngStream::kBaseline);
  const std::size_t k = config_.tactile.baseline_frames;
  processors_.clear();
  for (Finger f : kAllFingers) processors_.emplace_back(f, config_.tactile);
  for (std::size_t i = 0; i < k; ++i) {
    const double t = -static_cast<double>(k - i) * config_.dt_s;
    for (TactileProcessor& p : processors_) {
      const TactileFrame frame =
          render_tactile(p.finger(), 0.0, object_, config_.render, baseline_rng, t);
      if (sink_) sink_(frame, FrameKind::kBaseline);
      p.add_baseline_frame(frame);
    }
  }

  Rng vest_rng = make_rng(config_.seed, RngStream::kVestCalibration);
  const std::vector<ContactMetrics> sweep = calibration_sweep(config_, object_, processors_, vest_rng);
  vest_calibration_ = tega::calibrate(sweep, config_.vest_calibration);

  // Maximum voluntary contraction: full activation through the same front end.
  Rng emg_rng = make_rng(config_.seed, RngStream::kEmgCalibration);
  EmgFrontEnd front_end(config_.emg);
  std::vector<BlockMeans> blocks;
  const auto ticks = static_cast<std::int64_t>(std::llround(config_.emg_calibration_s / config_.dt_s));
  for (std::int64_t i = 0; i < ticks; ++i) {
    const double t0 = static_cast<double>(i) * config_.dt_s;
    for (const EmgSample& s : synth_emg(1.0, t0, config_.dt_s, config_.emg_synth, config_.emg, emg_rng)) {
      // Blocks inside the filter's step transient would inflate the maxima.
      if (auto b = front_end.push(s); b && b->timestamp > kEmgSettle_s) blocks.push_back(*b);
    }
  }
  emg_calibration_ = calibrate_channels(blocks);
}

void Trial::post_activation(double activation) { operator_->post_manual(activation); }

const TickRecord& Trial::step() {
  if (done_) return last_;
  const double t0 = static_cast<double>(tick_) * config_.dt_s;
  const double t = static_cast<double>(tick_ + 1) * config_.dt_s;

  std::optional<double> percept;
  if (config_.condition == Condition::kHaptic && last_vest_) percept = last_vest_->front_mean();
  const double activation = operator_->step(percept);

  TickRecord rec;
  rec.tick = tick_;
  rec.t = t;
  rec.activation = activation;
  for (const EmgSample& s : synth_emg(activation, t0, config_.dt_s, config_.emg_synth, config_.emg, emg_rng_)) {
    if (auto update = emg_->push(s)) {
      pose_ = *update;
      rec.pose_updated = true;
    }
  }
  rec.pose = pose_;

  const double per_finger = config_.pose_forces.force(pose_.fused);
  rec.forces.fill(per_finger);
  const GraspState before = world_;
  world_ = step_world(world_, rec.forces, object_, config_.world, config_.dt_s);
  rec.world = world_;
  rec.slip_event = world_.slip_events > before.slip_events;
  rec.deformation_event = world_.deformation_events > before.deformation_events;

  for (std::size_t i = 0; i < kFingerCount; ++i) {
    const TactileProcessor& p = processors_[i];
    const TactileFrame frame =
        render_tactile(p.finger(), rec.forces[i], object_, config_.render, tactile_rng_, t);
    if (sink_) sink_(frame, FrameKind::kFrame);
    rec.metrics[i] = p.process(frame);
  }
  rec.vest = build_vest_command(rec.metrics, vest_calibration_, config_.haptic);
  last_vest_ = rec.vest;

  if (world_.held && world_.height >= config_.world.lift_target_m - 1e-12) {
    stable_time_ += config_.dt_s;
  } else {
    stable_time_ = 0.0;
  }
  if (stable_time_ >= config_.stable_hold_s - 1e-9) {
    success_ = true;
    completion_time_ = t;
    rec.success_event = true;
  }

  SeriesPoint sp;
  sp.t = t;
  sp.pose = pose_.fused.external();
  for (std::size_t i = 0; i < kFingerCount; ++i) {
    const FingerCalibration& c = vest_calibration_[i];
    sp.cci_norm[i] = std::clamp(rec.metrics[i].cci / c.cci_max, 0.0, 1.0);
    sp.eda_norm[i] = std::clamp(static_cast<double>(rec.metrics[i].eda) / c.eda_max, 0.0, 1.0);
    sp.vest_front[i] = rec.vest.front[i];
    sp.vest_back[i] = rec.vest.back[i];
  }
  series_.push_back(sp);

  ++tick_;
  if (success_ || tick_ >= config_.tick_limit()) {
    done_ = true;
    if (!success_) completion_time_ = config_.time_limit_s;
  }
  last_ = rec;
  return last_;
}

TrialResult Trial::result() const {
  TrialResult r;
  r.object = object_.name;
  r.condition = config_.condition;
  r.seed = config_.seed;
  r.success = success_;
  r.completion_time_s = done_ ? completion_time_ : static_cast<double>(tick_) * config_.dt_s;
  r.slip_count = world_.slip_events;
  r.deformation_count = world_.deformation_events;
  r.crushed = world_.crushed;
  r.series = series_;
  if (series_.size() >= 2) {
    std::vector<double> pose(series_.size());
    std::vector<double> cci(series_.size());
    std::vector<double> eda(series_.size());
    for (std::size_t i = 0; i < series_.size(); ++i) {
      pose[i] = series_[i].pose;
      cci[i] = series_[i].mean_cci();
      eda[i] = series_[i].mean_eda();
    }
    r.r_pose_cci = pearson(pose, cci);
    r.r_pose_eda = pearson(pose, eda);
  }
  return r;
}

TrialResult run_trial(const TrialConfig& config, FrameSink sink,
                      const std::function<void(const Trial&, const TickRecord&)>& on_tick) {
  Trial trial(config, std::move(sink));
  while (!trial.done()) {
    const TickRecord& rec = trial.step();
    if (on_tick) on_tick(trial, rec);
  }
  return trial.result();
}

}  // namespace tega
