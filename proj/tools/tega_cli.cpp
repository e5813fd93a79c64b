// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "bridge.hpp"
#include "tega/tega.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Thrown for problems with the user's input; mapped to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure inside the library; carries the status for exit-code mapping.
struct LibraryError : std::runtime_error {
  LibraryError(tega_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  tega_status status;
};

void check(tega_status st) {
  if (st != TEGA_OK) throw LibraryError(st, tega_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  tega_string_free(s);
  return out;
}

int exit_code_for(tega_status st) {
  switch (st) {
    case TEGA_ERR_INVALID_ARGUMENT:
    case TEGA_ERR_UNKNOWN_OBJECT:
    case TEGA_ERR_PARSE:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw LibraryError(TEGA_ERR_IO, "cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LibraryError(TEGA_ERR_IO, "cannot create " + dir.string() + ": " + ec.message());
}

struct Settings {
  std::string config_path;
  std::string out_dir = "tega_out";
  int verbosity = 0;
  std::string command;

  // Trial overrides: config file first, then flags.
  json trial = json::object();
  json experiment = json::object();

  void load() {
    if (config_path.empty()) return;
    json file = read_json(config_path);
    if (!file.is_object()) throw ConfigError(config_path + ": top level must be an object");
    if (file.contains("experiment")) {
      experiment = file["experiment"];
      file.erase("experiment");
    }
    trial = std::move(file);
  }

  std::string resolved_trial() const {
    char* out = nullptr;
    check(tega_config_resolve(trial.dump().c_str(), &out));
    return take(out);
  }

  void note(const std::string& msg) const {
    if (verbosity > 0) std::cerr << msg << '\n';
  }
};

json manifest(const Settings& s, const std::string& resolved_trial) {
  json m;
  m["version"] = tega_version();
  m["command"] = s.command;
  const json cfg = json::parse(resolved_trial);
  m["seed"] = cfg.at("seed");
  m["config"] = cfg;
  if (!s.experiment.empty()) m["experiment"] = s.experiment;
  return m;
}

int cmd_calibrate(Settings& s, const std::string& emg_csv) {
  const std::string cfg = s.resolved_trial();
  char* out = nullptr;
  check(tega_calibrate(cfg.c_str(), emg_csv.empty() ? nullptr : emg_csv.c_str(), &out));
  const std::string calib = take(out);
  make_dir(s.out_dir);
  write_text(fs::path(s.out_dir) / "calibration.json", calib);
  write_text(fs::path(s.out_dir) / "manifest.json", manifest(s, cfg).dump(2));
  std::cout << calib << '\n';
  s.note("calibration written to " + (fs::path(s.out_dir) / "calibration.json").string());
  return kExitOk;
}

int cmd_run(Settings& s) {
  const std::string cfg = s.resolved_trial();
  char* out = nullptr;
  check(tega_run_trial_to_dir(cfg.c_str(), s.out_dir.c_str(), s.command.c_str(), &out));
  const json r = json::parse(take(out));
  std::cout << r.at("object").get<std::string>() << ' ' << r.at("condition").get<std::string>()
            << " seed " << r.at("seed") << ": " << (r.at("success").get<bool>() ? "success" : "failure")
            << " in " << r.at("completion_time") << " s, slips " << r.at("slip_count")
            << ", deformations " << r.at("deformation_count") << '\n';
  s.note("run logs written to " + s.out_dir);
  return kExitOk;
}

int cmd_experiment(Settings& s) {
  const std::string cfg = s.resolved_trial();
  char* out = nullptr;
  check(tega_run_experiment(cfg.c_str(), s.experiment.dump().c_str(), &out));
  const std::string summary = take(out);
  make_dir(s.out_dir);
  write_text(fs::path(s.out_dir) / "summary.json", summary);
  write_text(fs::path(s.out_dir) / "manifest.json", manifest(s, cfg).dump(2));
  check(tega_report(summary.c_str(), "table", &out));
  std::cout << take(out);
  s.note("summary written to " + (fs::path(s.out_dir) / "summary.json").string());
  return kExitOk;
}

int cmd_replay(const Settings& s, const std::string& log) {
  fs::path dir(log);
  if (fs::is_regular_file(dir)) dir = dir.parent_path();
  if (!fs::is_directory(dir)) throw ConfigError("no run directory at " + log);
  char* out = nullptr;
  const tega_status st = tega_replay(dir.string().c_str(), &out);
  const std::string report = take(out);
  if (st == TEGA_ERR_REPLAY_MISMATCH) {
    std::cerr << "replay mismatch in " << dir.string() << '\n' << report << '\n';
    return kExitRuntime;
  }
  check(st);
  const json r = json::parse(report);
  std::cout << "replay ok: " << r.at("metrics_checked") << " metric records and "
            << r.at("ticks_checked") << " ticks match\n";
  s.note(report);
  return kExitOk;
}

int cmd_report(const Settings& s, const std::string& format, std::string summary_path,
               const std::string& output) {
  if (summary_path.empty()) summary_path = (fs::path(s.out_dir) / "summary.json").string();
  std::ifstream in(summary_path);
  if (!in) throw ConfigError("cannot open summary " + summary_path);
  std::stringstream ss;
  ss << in.rdbuf();
  char* out = nullptr;
  check(tega_report(ss.str().c_str(), format.c_str(), &out));
  const std::string text = take(out);
  if (output.empty()) {
    std::cout << text;
  } else {
    write_text(output, text);
  }
  return kExitOk;
}

int cmd_serve(Settings& s, const std::string& address, unsigned short port, int sessions,
              bool fast) {
  tega_bridge::Options opt;
  opt.address = address;
  opt.port = port;
  opt.trial_config_json = s.resolved_trial();
  opt.realtime = !fast;
  opt.max_sessions = sessions;
  opt.log = &std::cerr;
  try {
    tega_bridge::serve(opt);
  } catch (const std::exception& e) {
    throw LibraryError(TEGA_ERR_IO, e.what());
  }
  return kExitOk;
}

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile/EMG teleoperation loop: metrics, vest mapping, pose decoding and "
               "simulated grasp trials"};
  app.set_version_flag("--version", std::string(tega_version()));
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  Settings s;
  s.command = join_args(argc, argv);
  app.add_option("-c,--config", s.config_path, "JSON configuration file (flags override it)")
      ->check(CLI::ExistingFile);
  app.add_option("-o,--out", s.out_dir, "Output directory")->capture_default_str();
  app.add_flag("-v,--verbose", s.verbosity, "More diagnostics on stderr");

  std::string object, condition, emg_csv, log, format = "table", summary_path, output;
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  std::optional<std::uint64_t> seed;
  std::optional<int> n, jobs;
  int sessions = 0;
  bool keep_series = false, fast = false;
  std::vector<std::string> objects, conditions;

  CLI::App* calibrate = app.add_subcommand("calibrate", "Derive vest and EMG calibration maxima");
  calibrate->add_option("--object", object, "Object name");
  calibrate->add_option("--seed", seed, "Random seed");
  calibrate->add_option("--emg-csv", emg_csv, "EMG recording (t,ch1,ch2,ch3) for the EMG maxima")
      ->check(CLI::ExistingFile);

  CLI::App* run = app.add_subcommand("run", "Run one trial and record replayable logs");
  run->add_option("--object", object, "Object name");
  run->add_option("--condition", condition, "haptic | non_haptic");
  run->add_option("--seed", seed, "Random seed");

  CLI::App* experiment = app.add_subcommand("experiment", "Run the object x condition grid");
  experiment->add_option("--n", n, "Trials per cell")->check(CLI::PositiveNumber);
  experiment->add_option("--objects", objects, "Objects (comma separated)")->delimiter(',');
  experiment->add_option("--conditions", conditions, "Conditions (comma separated)")
      ->delimiter(',');
  experiment->add_option("--seed,--base-seed", seed, "Seed of the first repetition");
  experiment->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  experiment->add_flag("--keep-series", keep_series, "Store time series for CSV export");

  CLI::App* replay = app.add_subcommand("replay", "Recompute metrics from a run's logged frames");
  replay->add_option("log", log, "Run directory or a log file inside it")->required();

  CLI::App* report = app.add_subcommand("report", "Render an experiment summary");
  report->add_option("--format", format, "table | json | csv")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();
  report->add_option("--summary", summary_path, "Summary file (default <out>/summary.json)");
  report->add_option("--output", output, "Write to this file instead of stdout");

  CLI::App* serve = app.add_subcommand("serve", "WebSocket bridge for the operator console");
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--address", address, "Listen address")->capture_default_str();
  serve->add_option("--object", object, "Object name");
  serve->add_option("--condition", condition, "manual | haptic | non_haptic (default manual)");
  serve->add_option("--seed", seed, "Random seed");
  serve->add_option("--sessions", sessions, "Exit after this many sessions (0 = never)");
  serve->add_flag("--fast", fast, "Do not pace ticks to wall-clock time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    s.load();
    if (!object.empty()) s.trial["object"] = object;
    if (!condition.empty()) s.trial["condition"] = condition;
    if (serve->parsed() && condition.empty() && !s.trial.contains("condition")) {
      s.trial["condition"] = "manual";
    }
    if (seed && !experiment->parsed()) s.trial["seed"] = *seed;

    if (calibrate->parsed()) return cmd_calibrate(s, emg_csv);
    if (run->parsed()) {
      if (!s.trial.contains("object")) {
        std::cerr << "run: an object name is required (--object or \"object\" in the config)\n\n"
                  << run->help();
        return kExitConfig;
      }
      return cmd_run(s);
    }
    if (experiment->parsed()) {
      if (n) s.experiment["n"] = *n;
      if (!objects.empty()) s.experiment["objects"] = objects;
      if (!conditions.empty()) s.experiment["conditions"] = conditions;
      if (seed) s.experiment["base_seed"] = *seed;
      if (jobs) s.experiment["jobs"] = *jobs;
      if (keep_series) s.experiment["keep_series"] = true;
      return cmd_experiment(s);
    }
    if (replay->parsed()) return cmd_replay(s, log);
    if (report->parsed()) return cmd_report(s, format, summary_path, output);
    if (serve->parsed()) return cmd_serve(s, address, port, sessions, fast);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const LibraryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
