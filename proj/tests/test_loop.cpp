#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "core/experiment.hpp"
#include "core/trial.hpp"

using namespace tega;

namespace {

TrialConfig quiet(const std::string& object, Condition c, std::uint64_t seed) {
  TrialConfig cfg;
  cfg.object = object;
  cfg.condition = c;
  cfg.seed = seed;
  return cfg;
}

// Front-mean vest intensity with the grip held at one pose level.
double level_intensity(const std::string& object, int level) {
  TrialConfig cfg = quiet(object, Condition::kManual, 1);
  cfg.emg_synth.noise_sd = 0.0;
  cfg.time_limit_s = 1.0;
  cfg.stable_hold_s = 100.0;
  Trial trial(cfg);
  trial.post_activation((level - 1) / 4.0 + 0.125);
  double front = 0.0;
  while (!trial.done()) front = trial.step().vest.front_mean();
  REQUIRE(trial.last().pose.fused.value() == level);
  return front;
}

}  // namespace

TEST_SUITE("loop") {
  TEST_CASE("pearson") {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{2, 4, 5};
    CHECK(*pearson(x, y) == doctest::Approx(0.9820).epsilon(1e-4));
    const std::vector<double> neg{3, 2, 1};
    CHECK(*pearson(x, neg) == doctest::Approx(-1.0));
    const std::vector<double> flat{4, 4, 4};
    CHECK_FALSE(pearson(x, flat).has_value());
    CHECK_FALSE(pearson(flat, x).has_value());
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
  }

  TEST_CASE("condition names") {
    for (auto c : {Condition::kHaptic, Condition::kNonHaptic, Condition::kManual}) {
      CHECK(parse_condition(condition_name(c)) == c);
    }
    CHECK_THROWS_AS(parse_condition("telepathic"), Error);
  }

  TEST_CASE("config validation") {
    TrialConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.dt_s = 0.0105;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.object = "object9";
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(TrialConfig{}.tick_limit() == 1500);
  }

  TEST_CASE("trials are deterministic per seed") {
    const TrialResult a = run_trial(quiet("object1", Condition::kHaptic, 42));
    const TrialResult b = run_trial(quiet("object1", Condition::kHaptic, 42));
    CHECK(a == b);
    const TrialResult c = run_trial(quiet("object1", Condition::kHaptic, 43));
    CHECK_FALSE(a.series == c.series);
  }

  TEST_CASE("trial bookkeeping") {
    TrialConfig cfg = quiet("object2", Condition::kHaptic, 3);
    std::size_t ticks = 0;
    const TrialResult r = run_trial(cfg, {}, [&](const Trial&, const TickRecord& rec) {
      CHECK(rec.tick == static_cast<std::int64_t>(ticks));
      CHECK(rec.t == doctest::Approx((ticks + 1) * cfg.dt_s));
      CHECK(rec.activation >= 0.0);
      CHECK(rec.activation <= 1.0);
      for (double f : rec.forces) CHECK(f == cfg.pose_forces.force(rec.pose.fused));
      ++ticks;
    });
    CHECK(r.series.size() == ticks);
    if (r.success) {
      CHECK(r.completion_time_s == doctest::Approx(ticks * cfg.dt_s));
      CHECK(r.completion_time_s < cfg.time_limit_s + 1e-9);
    }
    for (const SeriesPoint& p : r.series) {
      CHECK(p.pose >= 0);
      CHECK(p.pose <= 4);
      for (double v : p.cci_norm) CHECK((v >= 0.0 && v <= 1.0));
      for (double v : p.eda_norm) CHECK((v >= 0.0 && v <= 1.0));
    }
  }

  TEST_CASE("frames reach the sink, baseline first") {
    TrialConfig cfg = quiet("object3", Condition::kHaptic, 5);
    cfg.time_limit_s = 0.1;
    int baseline = 0, frames = 0;
    bool order_ok = true;
    run_trial(cfg, [&](const TactileFrame&, FrameKind kind) {
      if (kind == FrameKind::kBaseline) {
        if (frames > 0) order_ok = false;
        ++baseline;
      } else {
        ++frames;
      }
    });
    CHECK(order_ok);
    CHECK(baseline == static_cast<int>(4 * cfg.tactile.baseline_frames));
    CHECK(frames == 4 * 10);
  }

  TEST_CASE("a limp hand never lifts and never slips") {
    TrialConfig cfg = quiet("object1", Condition::kManual, 1);
    cfg.time_limit_s = 2.0;
    const TrialResult r = run_trial(cfg);
    CHECK_FALSE(r.success);
    CHECK(r.slip_count == 0);
    CHECK(r.completion_time_s == cfg.time_limit_s);
    CHECK(r.series.size() == 200);
    CHECK_FALSE(r.r_pose_cci.has_value());
  }

  TEST_CASE("noise-free closed loop lifts the container without slipping") {
    TrialConfig cfg = quiet("object2", Condition::kHaptic, 11);
    cfg.operator_model.noise_sd = 0.0;
    const TrialResult r = run_trial(cfg);
    CHECK(r.success);
    CHECK(r.slip_count == 0);
    REQUIRE(r.r_pose_cci.has_value());
    CHECK(*r.r_pose_cci > 0.3);
  }

  TEST_CASE("closed loop settles within 5 of an achievable target") {
    for (const char* object : {"object1", "object3"}) {
      const double target = level_intensity(object, 3);
      TrialConfig cfg = quiet(object, Condition::kHaptic, 17);
      cfg.operator_model.noise_sd = 0.0;
      cfg.operator_model.target_intensity = target;
      cfg.operator_model.deadband = 4.0;
      cfg.emg_synth.noise_sd = 0.0;
      cfg.stable_hold_s = 100.0;
      cfg.time_limit_s = 10.0;
      Trial trial(cfg);
      std::vector<double> front;
      while (!trial.done()) front.push_back(trial.step().vest.front_mean());
      double tail = 0.0;
      for (std::size_t i = front.size() - 200; i < front.size(); ++i) tail += front[i];
      tail /= 200.0;
      CHECK(std::abs(tail - target) <= 5.0);
    }
  }

  TEST_CASE("manual activation drives the pose") {
    TrialConfig cfg = quiet("object1", Condition::kManual, 2);
    cfg.emg_synth.noise_sd = 0.0;
    Trial trial(cfg);
    trial.post_activation(1.0);
    for (int i = 0; i < 50; ++i) trial.step();
    CHECK(trial.last().pose.fused.value() == 5);
    CHECK(trial.last().world.held);
    trial.post_activation(0.0);
    for (int i = 0; i < 50; ++i) trial.step();
    CHECK(trial.last().pose.fused.value() == 1);
    CHECK(trial.result().slip_count >= 0);
  }

  TEST_CASE("experiment seeds, order and aggregates") {
    ExperimentConfig ex;
    ex.objects = {"object3", "object1"};
    ex.n_per_cell = 3;
    ex.base_seed = 100;
    ex.jobs = 2;
    const ExperimentSummary s = run_experiment(ex);
    REQUIRE(s.trials.size() == 12);
    REQUIRE(s.cells.size() == 4);
    CHECK(s.cells[0].object == "object3");
    CHECK(s.cells[0].condition == Condition::kHaptic);
    CHECK(s.cells[1].condition == Condition::kNonHaptic);
    CHECK(s.cells[2].object == "object1");
    for (std::size_t i = 0; i < s.trials.size(); ++i) {
      CHECK(s.trials[i].seed == 100 + i % 3);
      CHECK(s.trials[i].series.empty());
    }
    const TrialResult again = run_trial([&] {
      TrialConfig c = ex.trial;
      c.object = "object1";
      c.condition = Condition::kNonHaptic;
      c.seed = 102;
      return c;
    }());
    CHECK(again.success == s.trials[11].success);
    CHECK(again.slip_count == s.trials[11].slip_count);
    CHECK(again.completion_time_s == s.trials[11].completion_time_s);

    ex.jobs = 1;
    CHECK(run_experiment(ex) == s);

    const CellSummary& c = s.cells[3];
    CHECK(c.n == 3);
    double slips = 0.0;
    for (int i = 9; i < 12; ++i) slips += static_cast<double>(s.trials[i].slip_count);
    CHECK(*c.mean_slip == doctest::Approx(slips / 3.0));
    CHECK(*c.success_ratio == doctest::Approx(c.successes / 3.0));
  }

  TEST_CASE("experiment validation") {
    ExperimentConfig ex;
    ex.n_per_cell = 0;
    CHECK_THROWS_AS(ex.validate(), Error);
    ex = {};
    ex.conditions = {Condition::kManual};
    CHECK_THROWS_AS(ex.validate(), Error);
    ex = {};
    ex.objects = {"object9"};
    CHECK_THROWS_AS(ex.validate(), Error);
  }

  TEST_CASE("empty cells report n/a") {
    const auto cells = aggregate({}, {"object1"}, {Condition::kHaptic});
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].n == 0);
    CHECK_FALSE(cells[0].mean_completion_time.has_value());
    ExperimentSummary s;
    s.cells = cells;
    const std::string table = render_report(s, ReportFormat::kTable);
    CHECK(table.find("n/a") != std::string::npos);
    std::istringstream header(table.substr(0, table.find('\n')));
    std::vector<std::string> columns;
    for (std::string w; header >> w;) columns.push_back(w);
    CHECK(columns == std::vector<std::string>{"object", "condition", "n", "success", "time_s",
                                              "slip", "deform", "r_cci", "r_eda"});
  }

  TEST_CASE("csv has one row per time step") {
    ExperimentConfig ex;
    ex.objects = {"object2"};
    ex.conditions = {Condition::kHaptic};
    ex.n_per_cell = 2;
    ex.keep_series = true;
    const ExperimentSummary s = run_experiment(ex);
    std::size_t ticks = 0;
    for (const auto& t : s.trials) ticks += t.series.size();
    const std::string csv = render_report(s, ReportFormat::kCsv);
    std::size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == ticks + 1);
    CHECK(csv.rfind("object,condition,seed,t,pose,", 0) == 0);
    CHECK_THROWS_AS(parse_report_format("yaml"), Error);
    CHECK(parse_report_format("csv") == ReportFormat::kCsv);
  }
}
