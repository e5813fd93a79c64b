#include "core/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/config.hpp"

namespace tega {

namespace {

std::string fixed(const std::optional<double>& v, int digits) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> read_optional(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_per_cell < 1) throw Error(ErrorCode::kInvalidArgument, "n per cell must be >= 1");
  if (objects.empty() || conditions.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "experiment needs objects and conditions");
  }
  if (jobs < 0) throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 0");
  for (Condition c : conditions) {
    if (c == Condition::kManual) {
      throw Error(ErrorCode::kInvalidArgument, "manual condition cannot run unattended");
    }
  }
  TrialConfig probe = trial;
  for (const std::string& o : objects) {
    probe.object = o;
    probe.validate();
  }
}

Json experiment_config_to_json(const ExperimentConfig& c) {
  Json j;
  j["objects"] = c.objects;
  j["conditions"] = Json::array();
  for (Condition k : c.conditions) j["conditions"].push_back(condition_name(k));
  j["n"] = c.n_per_cell;
  j["base_seed"] = c.base_seed;
  j["jobs"] = c.jobs;
  j["keep_series"] = c.keep_series;
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c) {
  JsonReader r(j, "experiment");
  r.read("objects", c.objects);
  std::vector<std::string> conds;
  if (r.read("conditions", conds)) {
    c.conditions.clear();
    for (const std::string& s : conds) c.conditions.push_back(parse_condition(s));
  }
  r.read("n", c.n_per_cell);
  r.read("base_seed", c.base_seed);
  r.read("jobs", c.jobs);
  r.read("keep_series", c.keep_series);
  r.finish();
  return c;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  struct Job {
    std::string object;
    Condition condition;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const std::string& o : config.objects) {
    for (Condition c : config.conditions) {
      for (int i = 0; i < config.n_per_cell; ++i) {
        jobs.push_back({o, c, config.base_seed + static_cast<std::uint64_t>(i)});
      }
    }
  }

  std::vector<TrialResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        TrialConfig tc = config.trial;
        tc.object = jobs[i].object;
        tc.condition = jobs[i].condition;
        tc.seed = jobs[i].seed;
        results[i] = run_trial(tc);
        if (!config.keep_series) results[i].series.clear();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };

  std::size_t threads = config.jobs == 0 ? std::thread::hardware_concurrency()
                                         : static_cast<std::size_t>(config.jobs);
  threads = std::clamp<std::size_t>(threads, 1, jobs.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentSummary s;
  s.base_seed = config.base_seed;
  s.n_per_cell = config.n_per_cell;
  s.trials = std::move(results);
  s.cells = aggregate(s.trials, config.objects, config.conditions);
  return s;
}

std::vector<CellSummary> aggregate(const std::vector<TrialResult>& trials,
                                   const std::vector<std::string>& objects,
                                   const std::vector<Condition>& conditions) {
  std::vector<CellSummary> cells;
  for (const std::string& o : objects) {
    for (Condition c : conditions) {
      CellSummary cell;
      cell.object = o;
      cell.condition = c;
      std::vector<double> time, slip, deform, r_cci, r_eda;
      for (const TrialResult& t : trials) {
        if (t.object != o || t.condition != c) continue;
        ++cell.n;
        cell.successes += t.success ? 1 : 0;
        time.push_back(t.completion_time_s);
        slip.push_back(static_cast<double>(t.slip_count));
        deform.push_back(static_cast<double>(t.deformation_count));
        if (t.r_pose_cci) r_cci.push_back(*t.r_pose_cci);
        if (t.r_pose_eda) r_eda.push_back(*t.r_pose_eda);
      }
      cell.mean_completion_time = mean_of(time);
      cell.mean_slip = mean_of(slip);
      cell.mean_deformation = mean_of(deform);
      if (cell.n > 0) cell.success_ratio = static_cast<double>(cell.successes) / cell.n;
      cell.mean_r_pose_cci = mean_of(r_cci);
      cell.mean_r_pose_eda = mean_of(r_eda);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

Json summary_to_json(const ExperimentSummary& s) {
  Json j;
  j["base_seed"] = s.base_seed;
  j["n_per_cell"] = s.n_per_cell;
  j["cells"] = Json::array();
  for (const CellSummary& c : s.cells) {
    Json e;
    e["object"] = c.object;
    e["condition"] = condition_name(c.condition);
    e["n"] = c.n;
    e["successes"] = c.successes;
    e["mean_completion_time"] = optional_number(c.mean_completion_time);
    e["mean_slip"] = optional_number(c.mean_slip);
    e["mean_deformation"] = optional_number(c.mean_deformation);
    e["success_ratio"] = optional_number(c.success_ratio);
    e["mean_r_pose_cci"] = optional_number(c.mean_r_pose_cci);
    e["mean_r_pose_eda"] = optional_number(c.mean_r_pose_eda);
    j["cells"].push_back(std::move(e));
  }
  j["trials"] = Json::array();
  for (const TrialResult& t : s.trials) {
    j["trials"].push_back(result_to_json(t, !t.series.empty()));
  }
  return j;
}

ExperimentSummary summary_from_json(const Json& j) {
  try {
    ExperimentSummary s;
    s.base_seed = j.at("base_seed").get<std::uint64_t>();
    s.n_per_cell = j.at("n_per_cell").get<int>();
    for (const Json& e : j.at("cells")) {
      CellSummary c;
      c.object = e.at("object").get<std::string>();
      c.condition = parse_condition(e.at("condition").get<std::string>());
      c.n = e.at("n").get<int>();
      c.successes = e.at("successes").get<int>();
      c.mean_completion_time = read_optional(e, "mean_completion_time");
      c.mean_slip = read_optional(e, "mean_slip");
      c.mean_deformation = read_optional(e, "mean_deformation");
      c.success_ratio = read_optional(e, "success_ratio");
      c.mean_r_pose_cci = read_optional(e, "mean_r_pose_cci");
      c.mean_r_pose_eda = read_optional(e, "mean_r_pose_eda");
      s.cells.push_back(std::move(c));
    }
    for (const Json& t : j.at("trials")) s.trials.push_back(result_from_json(t));
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("experiment summary: ") + ex.what());
  }
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string render_report(const ExperimentSummary& s, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kJson:
      out << summary_to_json(s).dump(2) << '\n';
      break;
    case ReportFormat::kTable: {
      char line[256];
      std::snprintf(line, sizeof line, "%-10s %-11s %4s %9s %9s %7s %7s %8s %8s\n", "object",
                    "condition", "n", "success", "time_s", "slip", "deform", "r_cci", "r_eda");
      out << line;
      for (const CellSummary& c : s.cells) {
        const std::string success =
            c.n > 0 ? std::to_string(c.successes) + "/" + std::to_string(c.n) : "n/a";
        std::snprintf(line, sizeof line, "%-10s %-11s %4d %9s %9s %7s %7s %8s %8s\n",
                      c.object.c_str(), std::string(condition_name(c.condition)).c_str(), c.n,
                      success.c_str(), fixed(c.mean_completion_time, 2).c_str(),
                      fixed(c.mean_slip, 2).c_str(), fixed(c.mean_deformation, 2).c_str(),
                      fixed(c.mean_r_pose_cci, 3).c_str(), fixed(c.mean_r_pose_eda, 3).c_str());
        out << line;
      }
      break;
    }
    case ReportFormat::kCsv: {
      out << "object,condition,seed,t,pose";
      for (const char* metric : {"cci", "eda"}) {
        for (Finger f : kAllFingers) out << ',' << metric << '_' << finger_name(f);
      }
      out << ",cci_mean,eda_mean";
      for (Finger f : kAllFingers) out << ",vest_front_" << finger_name(f);
      out << '\n';
      for (const TrialResult& t : s.trials) {
        for (const SeriesPoint& p : t.series) {
          out << t.object << ',' << condition_name(t.condition) << ',' << t.seed << ','
              << Json(p.t).dump() << ',' << p.pose;
          for (double v : p.cci_norm) out << ',' << Json(v).dump();
          for (double v : p.eda_norm) out << ',' << Json(v).dump();
          out << ',' << Json(p.mean_cci()).dump() << ',' << Json(p.mean_eda()).dump();
          for (int v : p.vest_front) out << ',' << v;
          out << '\n';
        }
      }
      break;
    }
  }
  return out.str();
}

}  // namespace tega
