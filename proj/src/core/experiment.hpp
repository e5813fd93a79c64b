#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/trial.hpp"
#include "core/wire.hpp"

namespace tega {

struct ExperimentConfig {
  TrialConfig trial;  // object, condition and seed are overridden per trial
  std::vector<std::string> objects{"object1", "object2", "object3"};
  std::vector<Condition> conditions{Condition::kHaptic, Condition::kNonHaptic};
  int n_per_cell = 20;
  std::uint64_t base_seed = 1;
  // Worker threads; 0 picks the hardware concurrency.
  int jobs = 1;
  // Keep per-trial time series in the summary (needed for CSV export).
  bool keep_series = false;

  void validate() const;
};

Json experiment_config_to_json(const ExperimentConfig& c);
// Reads the "experiment" section; `trial` is taken as given.
ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig base = {});

// Aggregates of one (object, condition) cell. Means are absent for empty cells.
struct CellSummary {
  std::string object;
  Condition condition = Condition::kHaptic;
  int n = 0;
  int successes = 0;
  std::optional<double> mean_completion_time;
  std::optional<double> mean_slip;
  std::optional<double> mean_deformation;
  std::optional<double> success_ratio;
  std::optional<double> mean_r_pose_cci;
  std::optional<double> mean_r_pose_eda;

  bool operator==(const CellSummary&) const = default;
};

struct ExperimentSummary {
  std::uint64_t base_seed = 0;
  int n_per_cell = 0;
  std::vector<CellSummary> cells;
  // Trial-index order: objects outermost, then conditions, then repetitions.
  std::vector<TrialResult> trials;

  bool operator==(const ExperimentSummary&) const = default;
};

// Seed of repetition i in every cell is base_seed + i.
ExperimentSummary run_experiment(const ExperimentConfig& config);

// Deterministic fold of per-trial results into cells, in the given order.
std::vector<CellSummary> aggregate(const std::vector<TrialResult>& trials,
                                   const std::vector<std::string>& objects,
                                   const std::vector<Condition>& conditions);

Json summary_to_json(const ExperimentSummary& s);
ExperimentSummary summary_from_json(const Json& j);

enum class ReportFormat { kTable, kJson, kCsv };
ReportFormat parse_report_format(std::string_view name);

// Table: one row per cell with "n/a" for empty cells. JSON: the summary.
// CSV: one row per time step of every trial carrying a series.
std::string render_report(const ExperimentSummary& s, ReportFormat format);

}  // namespace tega
