#include "core/trace.hpp"

#include <fstream>
#include <optional>

#include "core/config.hpp"
#include "core/haptic.hpp"

namespace tega {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// Keeps the report readable when a log is badly damaged.
constexpr std::size_t kMaxReported = 50;

void note(ReplayReport& report, std::string msg) {
  if (report.mismatches.size() < kMaxReported) report.mismatches.push_back(std::move(msg));
}

std::string describe(const ContactMetrics& m) { return metrics_to_json(m).dump(); }

}  // namespace

Json run_manifest(const TrialConfig& config, const std::string& command) {
  Json j;
  j["version"] = version();
  j["command"] = command;
  j["seed"] = config.seed;
  j["config"] = trial_config_to_json(config);
  return j;
}

TrialResult run_trial_to_dir(const TrialConfig& config, const std::filesystem::path& dir,
                             const RunOptions& options) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  write_json_file(dir / kRunManifest, run_manifest(config, options.command));

  std::optional<FrameRecorder> recorder;
  if (options.record_frames) recorder.emplace(dir, options.storage);
  FrameSink sink;
  if (recorder) {
    sink = [&recorder](const TactileFrame& f, FrameKind k) { recorder->record(f, k); };
  }

  Trial trial(config, sink);
  write_json_file(dir / kRunCalibration,
                  calibration_to_json({trial.vest_calibration(), trial.emg_calibration()}));

  std::ofstream trace = open_out(dir / kRunTrace);
  std::ofstream metrics = open_out(dir / kRunMetrics);
  while (!trial.done()) {
    const TickRecord& rec = trial.step();
    trace << trace_record(rec).dump() << '\n';
    for (const ContactMetrics& m : rec.metrics) metrics << metrics_to_json(m).dump() << '\n';
  }
  trace.flush();
  metrics.flush();
  if (!trace || !metrics) throw Error(ErrorCode::kIo, "failed writing logs in " + dir.string());
  if (recorder) recorder->flush();

  const TrialResult result = trial.result();
  write_json_file(dir / kRunResult, result_to_json(result, false));
  return result;
}

ReplayReport replay_run(const std::filesystem::path& dir) {
  const Json manifest = read_json_file(dir / kRunManifest);
  const TrialConfig config = [&] {
    try {
      return trial_config_from_json(manifest.at("config"));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kParse, std::string("run manifest: ") + ex.what());
    }
  }();
  const CalibrationFile calib = calibration_from_json(read_json_file(dir / kRunCalibration));
  const std::vector<ManifestEntry> entries = read_manifest(dir / FrameRecorder::kManifestName);
  const std::vector<std::string> metric_lines = read_lines(dir / kRunMetrics);
  const std::vector<std::string> trace_lines = read_lines(dir / kRunTrace);

  ReplayReport report;
  std::vector<TactileProcessor> processors;
  for (Finger f : kAllFingers) processors.emplace_back(f, config.tactile);

  std::vector<ContactMetrics> recomputed;
  for (const ManifestEntry& e : entries) {
    const TactileFrame frame = load_frame(e, dir);
    ++report.frames;
    TactileProcessor& p = processors[finger_slot(frame.finger)];
    if (e.kind == FrameKind::kBaseline) {
      p.add_baseline_frame(frame);
    } else {
      recomputed.push_back(p.process(frame));
    }
  }

  if (recomputed.size() != metric_lines.size()) {
    note(report, "metrics log has " + std::to_string(metric_lines.size()) +
                     " records, frames give " + std::to_string(recomputed.size()));
  }
  const std::size_t n = std::min(recomputed.size(), metric_lines.size());
  for (std::size_t i = 0; i < n; ++i) {
    const ContactMetrics logged = metrics_from_json(parse_json(metric_lines[i], "metrics line"));
    ++report.metrics_checked;
    if (!(logged == recomputed[i])) {
      note(report, "metrics record " + std::to_string(i + 1) + ": logged " + describe(logged) +
                       ", recomputed " + describe(recomputed[i]));
    }
  }

  if (recomputed.size() != kFingerCount * trace_lines.size()) {
    note(report, "trace has " + std::to_string(trace_lines.size()) + " ticks, frames give " +
                     std::to_string(recomputed.size() / kFingerCount));
  }
  const std::size_t ticks = std::min(trace_lines.size(), recomputed.size() / kFingerCount);
  for (std::size_t k = 0; k < ticks; ++k) {
    const Json rec = parse_json(trace_lines[k], "trace line");
    std::array<ContactMetrics, kFingerCount> tick{};
    for (std::size_t i = 0; i < kFingerCount; ++i) tick[i] = recomputed[k * kFingerCount + i];
    const VestCommand vest = build_vest_command(tick, calib.vest, config.haptic);
    ++report.ticks_checked;
    try {
      for (Finger f : kAllFingers) {
        const std::size_t i = finger_slot(f);
        const std::string where =
            "tick " + std::to_string(k + 1) + " " + std::string(finger_name(f)) + ": ";
        if (rec.at("cci").at(i).get<double>() != tick[i].cci) {
          note(report, where + "trace cci differs from recomputed " + Json(tick[i].cci).dump());
        }
        if (rec.at("eda").at(i).get<std::int64_t>() != tick[i].eda) {
          note(report, where + "trace eda differs from recomputed " + std::to_string(tick[i].eda));
        }
        if (rec.at("vest_front").at(i).get<int>() != vest.front_column(f)) {
          note(report, where + "trace vest intensity differs from recomputed " +
                           std::to_string(vest.front_column(f)));
        }
      }
    } catch (const nlohmann::json::exception& ex) {
      note(report, "tick " + std::to_string(k + 1) + ": malformed trace record (" + ex.what() + ")");
    }
  }
  return report;
}

}  // namespace tega
