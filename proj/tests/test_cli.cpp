#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "tega_cli_test";

// Runs the CLI with output captured into a file; returns the exit code.
int tega(const std::string& args, std::string* output = nullptr) {
  fs::create_directories(kWork);
  const fs::path log = kWork / "stdout.txt";
  const std::string cmd =
      std::string(TEGA_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    std::string out;
    CHECK(tega("--help", &out) == 0);
    CHECK(out.find("experiment") != std::string::npos);
    CHECK(tega("", &out) != 0);
    CHECK(tega("run --object", &out) == 1);
    CHECK(tega("frobnicate", &out) == 1);
  }

  TEST_CASE("runs are byte-identical for a seed") {
    const fs::path a = kWork / "det_a", b = kWork / "det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    REQUIRE(tega("run --object object1 --condition haptic --seed 7 -o " + q(a)) == 0);
    REQUIRE(tega("run --object object1 --condition haptic --seed 7 -o " + q(b)) == 0);
    for (const char* f : {"trace.jsonl", "metrics.jsonl", "result.json", "calibration.json",
                          "frames.bin"}) {
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
      CHECK(!slurp(a / f).empty());
    }
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["config"]["object"] == "object1");

    const fs::path c = kWork / "det_c";
    fs::remove_all(c);
    REQUIRE(tega("run --object object1 --condition haptic --seed 8 -o " + q(c)) == 0);
    CHECK(slurp(a / "trace.jsonl") != slurp(c / "trace.jsonl"));
  }

  TEST_CASE("unknown object and bad inputs exit 1") {
    std::string out;
    CHECK(tega("run --object object42 -o " + q(kWork / "bad"), &out) == 1);
    CHECK(out.find("object42") != std::string::npos);
    CHECK(tega("run --condition sideways -o " + q(kWork / "bad"), &out) == 1);
    CHECK(tega("-c " + q(kWork / "missing.json") + " run", &out) == 1);
    std::ofstream(kWork / "broken.json") << "{\"seed\": ";
    CHECK(tega("-c " + q(kWork / "broken.json") + " run -o " + q(kWork / "bad"), &out) == 1);
    std::ofstream(kWork / "typo.json") << R"({"sed": 3})";
    CHECK(tega("-c " + q(kWork / "typo.json") + " run -o " + q(kWork / "bad"), &out) == 1);
  }

  TEST_CASE("config file with flag overrides") {
    const fs::path dir = kWork / "cfg_run";
    fs::remove_all(dir);
    std::ofstream(kWork / "cfg.json") << R"({"object": "object3", "seed": 3, "time_limit": 1.0})";
    REQUIRE(tega("-c " + q(kWork / "cfg.json") + " run --seed 5 -o " + q(dir)) == 0);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["config"]["object"] == "object3");
    CHECK(manifest["config"]["time_limit"] == 1.0);
  }

  TEST_CASE("replay accepts a run and rejects a tampered one") {
    const fs::path dir = kWork / "replay";
    fs::remove_all(dir);
    REQUIRE(tega("run --object object2 --seed 4 -o " + q(dir)) == 0);
    std::string out;
    CHECK(tega("replay " + q(dir), &out) == 0);
    CHECK(out.find("ok") != std::string::npos);
    CHECK(tega("replay " + q(dir / "trace.jsonl")) == 0);

    std::vector<std::string> rows;
    {
      std::ifstream in(dir / "metrics.jsonl");
      for (std::string l; std::getline(in, l);) rows.push_back(l);
    }
    auto m = nlohmann::json::parse(rows[10]);
    m["eda"] = m["eda"].get<int>() + 1;
    rows[10] = m.dump();
    {
      std::ofstream o(dir / "metrics.jsonl", std::ios::trunc);
      for (const auto& r : rows) o << r << '\n';
    }
    CHECK(tega("replay " + q(dir), &out) == 2);
    CHECK(out.find("mismatch") != std::string::npos);
    CHECK(tega("replay " + q(kWork / "no_such_run")) != 0);
  }

  TEST_CASE("calibrate writes a calibration record") {
    const fs::path dir = kWork / "calib";
    fs::remove_all(dir);
    REQUIRE(tega("calibrate --object object3 --seed 2 -o " + q(dir)) == 0);
    const auto c = nlohmann::json::parse(slurp(dir / "calibration.json"));
    CHECK(c["index"]["eda_max"].get<double>() > 1.0);
    CHECK(c["emg"]["e_max"].size() == 3);
  }

  TEST_CASE("experiment and report") {
    const fs::path dir = kWork / "exp";
    fs::remove_all(dir);
    std::string out;
    REQUIRE(tega("experiment --n 2 --objects object1,object3 --keep-series -o " + q(dir), &out) ==
            0);
    CHECK(out.find("object3") != std::string::npos);
    REQUIRE(fs::exists(dir / "summary.json"));

    std::string a, b;
    REQUIRE(tega("experiment --n 2 --objects object1,object3 --jobs 2 -o " + q(kWork / "exp2"),
                 &b) == 0);
    REQUIRE(tega("report --format table -o " + q(dir), &a) == 0);
    CHECK(a == b.substr(b.size() - a.size()));

    REQUIRE(tega("report --format csv -o " + q(dir) + " --output " + q(kWork / "series.csv")) ==
            0);
    const std::string csv = slurp(kWork / "series.csv");
    CHECK(csv.rfind("object,condition,seed,t,pose", 0) == 0);
    CHECK(tega("report --format yaml -o " + q(dir)) == 1);
    CHECK(tega("experiment --objects object9 -o " + q(kWork / "exp3")) == 1);
    CHECK(tega("experiment --n 0 -o " + q(kWork / "exp3")) == 1);
  }
}
