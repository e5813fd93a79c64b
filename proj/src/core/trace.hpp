#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "core/frame_io.hpp"
#include "core/trial.hpp"
#include "core/wire.hpp"

namespace tega {

// Layout of a recorded run directory.
inline constexpr const char* kRunManifest = "manifest.json";
inline constexpr const char* kRunCalibration = "calibration.json";
inline constexpr const char* kRunTrace = "trace.jsonl";
inline constexpr const char* kRunMetrics = "metrics.jsonl";
inline constexpr const char* kRunResult = "result.json";

struct RunOptions {
  bool record_frames = true;
  FrameStorage storage = FrameStorage::kRawStream;
  // Command line recorded in the reproducibility manifest.
  std::string command;
};

// {version, command, seed, config}
Json run_manifest(const TrialConfig& config, const std::string& command);

// Runs one trial and writes manifest, calibration, per-tick trace, per-frame
// metrics, frames and result under `dir` (created if needed).
TrialResult run_trial_to_dir(const TrialConfig& config, const std::filesystem::path& dir,
                             const RunOptions& options = {});

struct ReplayReport {
  std::size_t frames = 0;
  std::size_t metrics_checked = 0;
  std::size_t ticks_checked = 0;
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty(); }
};

// Re-derives baselines and metrics from the logged frames and compares them
// with metrics.jsonl and with the per-tick CCI/EDA/vest values of trace.jsonl.
ReplayReport replay_run(const std::filesystem::path& dir);

}  // namespace tega
