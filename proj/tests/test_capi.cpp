#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracle.hpp"

#include "tega/tega.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  tega_string_free(s);
  return out;
}

std::vector<json> lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tega_capi_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("version and status names") {
    CHECK(std::strlen(tega_version()) > 0);
    CHECK(std::string(tega_status_name(TEGA_OK)) == "ok");
    CHECK(std::string(tega_status_name(TEGA_ERR_REPLAY_MISMATCH)).size() > 0);
    tega_string_free(nullptr);
  }

  TEST_CASE("metrics of the worked example") {
    std::vector<std::uint8_t> rgb(27, 0);
    for (int c = 0; c < 3; ++c) {
      rgb[3 * 4 + c] = 90;
      rgb[3 * 5 + c] = 30;
    }
    const std::vector<double> base(27, 0.0);
    tega_metrics m{};
    REQUIRE(tega_extract_metrics(rgb.data(), base.data(), 3, 3, nullptr, &m) == TEGA_OK);
    CHECK(m.contact == 1);
    CHECK(m.mu_x == doctest::Approx(1.25));
    CHECK(m.sigma == doctest::Approx(0.43301).epsilon(1e-4));
    CHECK(m.threshold == doctest::Approx(89.4457).epsilon(1e-4));
    CHECK(m.eda == 1);
    CHECK(m.cci == doctest::Approx(90.0));
  }

  TEST_CASE("invalid arguments set the last error") {
    tega_metrics m{};
    CHECK(tega_extract_metrics(nullptr, nullptr, 3, 3, nullptr, &m) == TEGA_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(tega_last_error()) > 0);
    std::vector<std::uint8_t> rgb(3, 0);
    std::vector<double> base(3, 0.0);
    CHECK(tega_extract_metrics(rgb.data(), base.data(), 0, 1, nullptr, &m) != TEGA_OK);
    tega_tactile_config cfg;
    tega_tactile_config_default(&cfg);
    cfg.weights[0] = 0.9;
    CHECK(tega_extract_metrics(rgb.data(), base.data(), 1, 1, &cfg, &m) ==
          TEGA_ERR_INVALID_ARGUMENT);
    int v = 0;
    CHECK(tega_fuse_poses(0, 1, 2, &v) == TEGA_ERR_INVALID_ARGUMENT);
    CHECK(tega_quantize_pose(0.5, 0.0, &v) == TEGA_ERR_INVALID_ARGUMENT);
  }

  TEST_CASE("random frames match the reference") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 100; ++trial) {
      const int w = dim(rng), h = dim(rng);
      std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3 * w * h));
      std::vector<double> base(rgb.size());
      for (auto& b : rgb) b = static_cast<std::uint8_t>(byte(rng));
      for (auto& b : base) b = byte(rng) * 0.5;
      tega_metrics got{};
      REQUIRE(tega_extract_metrics(rgb.data(), base.data(), w, h, nullptr, &got) == TEGA_OK);
      const oracle::Metrics want = oracle::contact_metrics(rgb, base, w, h);
      CHECK(got.contact == static_cast<int>(want.contact));
      CHECK(got.eda == want.eda);
      CHECK(oracle::close_rel(got.cci, want.cci, 1e-9));
      CHECK(oracle::close_rel(got.sigma, want.sigma, 1e-9));
    }
  }

  TEST_CASE("tactile handle") {
    tega_tactile_config cfg;
    tega_tactile_config_default(&cfg);
    cfg.baseline_frames = 2;
    tega_tactile* t = nullptr;
    REQUIRE(tega_tactile_create(1, &cfg, &t) == TEGA_OK);
    std::vector<std::uint8_t> rest(12, 10);
    tega_metrics m{};
    CHECK(tega_tactile_process(t, rest.data(), 2, 2, 0.0, &m) != TEGA_OK);
    int complete = -1;
    CHECK(tega_tactile_add_baseline(t, rest.data(), 2, 2, 0.0, &complete) == TEGA_OK);
    CHECK(complete == 0);
    CHECK(tega_tactile_add_baseline(t, rest.data(), 2, 2, 0.01, &complete) == TEGA_OK);
    CHECK(complete == 1);
    std::vector<std::uint8_t> press = rest;
    for (int c = 0; c < 3; ++c) press[c] = 60;
    REQUIRE(tega_tactile_process(t, press.data(), 2, 2, 0.5, &m) == TEGA_OK);
    CHECK(m.finger == 1);
    CHECK(m.t == 0.5);
    CHECK(m.mu_x == 0.0);
    CHECK(m.cci == doctest::Approx(50.0));
    CHECK(tega_tactile_process(t, press.data(), 3, 1, 0.5, &m) == TEGA_ERR_DIMENSION_MISMATCH);
    tega_tactile_destroy(t);
    CHECK(tega_tactile_create(7, &cfg, &t) == TEGA_ERR_INVALID_ARGUMENT);
  }

  TEST_CASE("vest functions") {
    int v = -1;
    REQUIRE(tega_vest_intensity(0.5, 1.0, 0.01, &v) == TEGA_OK);
    CHECK(v == 50);
    tega_vest_intensity(1.0, 1.0, 0.01, &v);
    CHECK(v == 99);
    tega_vest_intensity(0.0, 1.0, 0.01, &v);
    CHECK(v == 1);
    CHECK(tega_vest_intensity(0.5, 0.0, 0.01, &v) == TEGA_ERR_INVALID_ARGUMENT);

    tega_metrics ms[4]{};
    for (int f = 0; f < 4; ++f) {
      ms[f].finger = f;
      ms[f].contact = f != 2;
      ms[f].cci = 0.25 * f;
      ms[f].eda = 10 * f;
    }
    const tega_finger_calibration cal[4] = {{1.0, 40.0}, {1.0, 40.0}, {1.0, 40.0}, {1.0, 40.0}};
    tega_vest out{};
    REQUIRE(tega_vest_map(ms, 4, cal, 1, &out) == TEGA_OK);
    for (int r = 0; r < 4; ++r) {
      CHECK(out.front[r * 4 + 0] == 1);
      CHECK(out.front[r * 4 + 2] == 0);
      CHECK(out.front[r * 4 + 3] == oracle::intensity(0.75, 1.0));
      CHECK(out.back[r * 4 + 1] == oracle::intensity(10.0, 40.0));
    }
    CHECK(out.degraded == 0);

    tega_finger_calibration got[4]{};
    REQUIRE(tega_vest_calibrate(ms, 4, got) != TEGA_OK);  // finger 2 never touched
    ms[2].contact = 1;
    ms[0].cci = 0.1;
    ms[0].eda = 1;
    REQUIRE(tega_vest_calibrate(ms, 4, got) == TEGA_OK);
    CHECK(got[3].cci_max == 0.75);
    CHECK(got[3].eda_max == 30.0);
  }

  TEST_CASE("EMG functions") {
    double mag = 0.0;
    REQUIRE(tega_butterworth_magnitude(4, 50.0, 1000.0, 50.0, &mag) == TEGA_OK);
    CHECK(mag == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
    tega_butterworth_magnitude(4, 50.0, 1000.0, 200.0, &mag);
    CHECK(mag == doctest::Approx(oracle::butterworth_magnitude(4, 50.0, 1000.0, 200.0)));

    int p = 0;
    const double e[4] = {0.0, 0.3, 1.0, 1.5};
    const int want[4] = {1, 2, 5, 5};
    for (int i = 0; i < 4; ++i) {
      REQUIRE(tega_quantize_pose(e[i] * 2.0, 2.0, &p) == TEGA_OK);
      CHECK(p == want[i]);
    }
    for (int a = 1; a <= 5; ++a) {
      for (int b = 1; b <= 5; ++b) {
        for (int c = 1; c <= 5; ++c) {
          REQUIRE(tega_fuse_poses(a, b, c, &p) == TEGA_OK);
          CHECK(p == oracle::fuse(a, b, c));
        }
      }
    }

    const double e_max[3] = {1.0, 1.0, 1.0};
    tega_emg* emg = nullptr;
    REQUIRE(tega_emg_create(nullptr, e_max, &emg) == TEGA_OK);
    int ready = 0, blocks = 0;
    tega_pose pose{};
    for (int i = 0; i < 1000; ++i) {
      const double ch[3] = {0.6, 0.6, 0.1};
      REQUIRE(tega_emg_push(emg, i / 1000.0, ch, &ready, &pose) == TEGA_OK);
      blocks += ready;
    }
    CHECK(blocks == 10);
    CHECK(pose.per_channel[0] == 3);
    CHECK(pose.per_channel[2] == 1);
    CHECK(pose.fused == 3);
    tega_emg_destroy(emg);

    const double bad[3] = {1.0, -1.0, 1.0};
    CHECK(tega_emg_create(nullptr, bad, &emg) == TEGA_ERR_CALIBRATION);
  }

  TEST_CASE("pearson") {
    const double x[3] = {1, 2, 3};
    const double y[3] = {2, 4, 5};
    double r = 0.0;
    int defined = 0;
    REQUIRE(tega_pearson(x, y, 3, &r, &defined) == TEGA_OK);
    CHECK(defined == 1);
    CHECK(r == doctest::Approx(0.9820).epsilon(1e-4));
    const double flat[3] = {1, 1, 1};
    r = 42.0;
    REQUIRE(tega_pearson(x, flat, 3, &r, &defined) == TEGA_OK);
    CHECK(defined == 0);
    CHECK(r == 42.0);
  }

  TEST_CASE("configuration") {
    char* out = nullptr;
    REQUIRE(tega_config_default(&out) == TEGA_OK);
    const json def = json::parse(take(out));
    CHECK(def["object"] == "object1");
    REQUIRE(tega_config_resolve(R"({"object":"object3","seed":9})", &out) == TEGA_OK);
    const json res = json::parse(take(out));
    CHECK(res["object"] == "object3");
    CHECK(res["seed"] == 9);
    CHECK(tega_config_resolve(R"({"object":"object9"})", &out) == TEGA_ERR_UNKNOWN_OBJECT);
    CHECK(tega_config_resolve(R"({"bogus":1})", &out) == TEGA_ERR_PARSE);
    CHECK(tega_config_resolve("{", &out) == TEGA_ERR_PARSE);
    CHECK(tega_config_resolve(R"({"dt":-1})", &out) == TEGA_ERR_INVALID_ARGUMENT);
  }

  TEST_CASE("trial session messages") {
    tega_trial* t = nullptr;
    REQUIRE(tega_trial_create(R"({"object":"object2","seed":4})", &t) == TEGA_OK);
    char* text = nullptr;
    REQUIRE(tega_trial_hello(t, &text) == TEGA_OK);
    const json hello = json::parse(take(text));
    CHECK(hello["type"] == "hello");
    CHECK(tega_trial_dt(t) == 0.01);
    CHECK(tega_trial_post_activation(t, 0.5) == TEGA_ERR_INVALID_ARGUMENT);

    std::uint64_t seq = hello["seq"].get<std::uint64_t>();
    int ticks = 0;
    bool summary = false;
    while (!tega_trial_done(t)) {
      REQUIRE(tega_trial_step(t, &text) == TEGA_OK);
      const auto msgs = lines(take(text));
      REQUIRE(msgs.size() >= 3);
      CHECK(msgs[0]["type"] == "activation");
      int vests = 0;
      for (const json& m : msgs) {
        CHECK(m["seq"].get<std::uint64_t>() == seq + 1);
        seq = m["seq"].get<std::uint64_t>();
        vests += m["type"] == "vest";
        if (m["type"] == "frame_metrics") CHECK(m["metrics"].size() == 4);
        if (m["type"] == "trial_summary") summary = true;
      }
      CHECK(vests == 1);
      ++ticks;
    }
    CHECK(summary);
    CHECK(tega_trial_step(t, &text) == TEGA_ERR_INVALID_ARGUMENT);
    REQUIRE(tega_trial_result(t, 1, &text) == TEGA_OK);
    const json r = json::parse(take(text));
    CHECK(r["series"].size() == static_cast<std::size_t>(ticks));
    tega_trial_destroy(t);
  }

  TEST_CASE("manual trial accepts activations") {
    tega_trial* t = nullptr;
    REQUIRE(tega_trial_create(R"({"condition":"manual","time_limit":1.0})", &t) == TEGA_OK);
    CHECK(tega_trial_post_activation(t, 1.5) == TEGA_ERR_INVALID_ARGUMENT);
    REQUIRE(tega_trial_post_activation(t, 1.0) == TEGA_OK);
    char* text = nullptr;
    int top = 0;
    while (!tega_trial_done(t)) {
      REQUIRE(tega_trial_step(t, &text) == TEGA_OK);
      for (const json& m : lines(take(text))) {
        if (m["type"] == "pose") top = std::max(top, m["fused"].get<int>());
      }
    }
    CHECK(top >= 3);
    tega_trial_destroy(t);
  }

  TEST_CASE("recorded run, replay and tampering") {
    const fs::path dir = scratch("run");
    char* text = nullptr;
    REQUIRE(tega_run_trial_to_dir(R"({"object":"object1","seed":7,"time_limit":1.5})",
                                  dir.c_str(), "capi test", &text) == TEGA_OK);
    const json result = json::parse(take(text));
    CHECK(result["seed"] == 7);
    REQUIRE(tega_replay(dir.c_str(), &text) == TEGA_OK);
    CHECK(json::parse(take(text))["ok"] == true);

    {
      std::ifstream in(dir / "trace.jsonl");
      std::vector<std::string> rows;
      for (std::string l; std::getline(in, l);) rows.push_back(l);
      json row = json::parse(rows[3]);
      row["vest_front"][0] = row["vest_front"][0].get<int>() + 1;
      rows[3] = row.dump();
      std::ofstream out(dir / "trace.jsonl", std::ios::trunc);
      for (const auto& l : rows) out << l << '\n';
    }
    REQUIRE(tega_replay(dir.c_str(), &text) == TEGA_ERR_REPLAY_MISMATCH);
    const json report = json::parse(take(text));
    CHECK(report["ok"] == false);
    CHECK(report["mismatches"].size() >= 1);
    CHECK(tega_replay(scratch("missing").c_str(), &text) == TEGA_ERR_IO);
  }

  TEST_CASE("calibration record") {
    char* text = nullptr;
    REQUIRE(tega_calibrate(R"({"object":"object3"})", nullptr, &text) == TEGA_OK);
    const json c = json::parse(take(text));
    CHECK(c["thumb"]["cci_max"].get<double>() > 0.0);
    CHECK(c["emg"]["e_max"].size() == 3);

    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    {
      std::ofstream csv(dir / "emg.csv");
      csv << "t,ch1,ch2,ch3\n";
      for (int i = 1; i <= 1000; ++i) csv << i / 1000.0 << ",0.4,0.8,1.2\n";
    }
    REQUIRE(tega_calibrate(nullptr, (dir / "emg.csv").c_str(), &text) == TEGA_OK);
    const json e = json::parse(take(text));
    CHECK(e["emg"]["e_max"][1].get<double>() == doctest::Approx(0.8).epsilon(1e-3));
    CHECK(tega_calibrate(nullptr, (dir / "nope.csv").c_str(), &text) == TEGA_ERR_IO);
  }

  TEST_CASE("experiment and report") {
    char* summary = nullptr;
    REQUIRE(tega_run_experiment(nullptr, R"({"objects":["object3"],"n":2,"keep_series":true})",
                                &summary) == TEGA_OK);
    const std::string s = take(summary);
    const json j = json::parse(s);
    CHECK(j["cells"].size() == 2);
    char* out = nullptr;
    REQUIRE(tega_report(s.c_str(), "table", &out) == TEGA_OK);
    CHECK(take(out).find("object3") != std::string::npos);
    REQUIRE(tega_report(s.c_str(), "csv", &out) == TEGA_OK);
    CHECK(take(out).rfind("object,condition,seed", 0) == 0);
    CHECK(tega_report(s.c_str(), "xml", &out) == TEGA_ERR_INVALID_ARGUMENT);
    CHECK(tega_run_experiment(nullptr, R"({"n":0})", &summary) == TEGA_ERR_INVALID_ARGUMENT);
    CHECK(tega_run_experiment(nullptr, R"({"conditions":["manual"]})", &summary) ==
          TEGA_ERR_INVALID_ARGUMENT);
  }
}
