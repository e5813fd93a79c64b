#include <random>
#include <vector>

#include "doctest.h"
#include "oracle.hpp"

#include "core/haptic.hpp"

using namespace tega;

namespace {

FingerCalibration calib(double cci_max, double eda_max, Finger f = Finger::kThumb) {
  FingerCalibration c;
  c.finger = f;
  c.cci_max = cci_max;
  c.eda_max = eda_max;
  return c;
}

ContactMetrics contact(Finger f, double cci, std::int64_t eda, double t = 0.0) {
  ContactMetrics m;
  m.finger = f;
  m.timestamp = t;
  m.contact = true;
  m.cci = cci;
  m.eda = eda;
  return m;
}

}  // namespace

TEST_SUITE("haptic") {
  TEST_CASE("slope from the calibration maximum") {
    CHECK(derive_k(1.0) == doctest::Approx(9.19024).epsilon(1e-6));
    CHECK(derive_k(2.0) == doctest::Approx(9.19024 / 2.0).epsilon(1e-6));
    CHECK(derive_k(50.0, 0.05) == doctest::Approx(2.0 * std::log(19.0) / 50.0));
    CHECK_THROWS_AS(derive_k(0.0), Error);
    CHECK_THROWS_AS(derive_k(1.0, 0.5), Error);
    CHECK_THROWS_AS(derive_k(1.0, 0.0), Error);
  }

  TEST_CASE("intensity anchors") {
    const FingerCalibration c = calib(1.0, 40.0);
    CHECK(map_cci_to_intensity(0.0, c) == 1);
    CHECK(map_cci_to_intensity(0.5, c) == 50);
    CHECK(map_cci_to_intensity(1.0, c) == 99);
    CHECK(map_eda_to_intensity(0.0, c) == 1);
    CHECK(map_eda_to_intensity(20.0, c) == 50);
    CHECK(map_eda_to_intensity(40.0, c) == 99);
    CHECK(map_cci_to_intensity(100.0, c) == 100);
  }

  TEST_CASE("rounding is half up") {
    CHECK(to_intensity(0.505) == 51);
    CHECK(to_intensity(0.5049) == 50);
    CHECK(to_intensity(-0.2) == 0);
    CHECK(to_intensity(1.4) == 100);
  }

  TEST_CASE("monotone and bounded against the reference") {
    for (double max : {0.3, 1.0, 7.5, 49.0}) {
      const FingerCalibration c = calib(max, max);
      int prev = -1;
      for (int i = 0; i <= 2000; ++i) {
        const double x = 10.0 * max * i / 2000.0;
        const int v = map_cci_to_intensity(x, c);
        CHECK(v >= 0);
        CHECK(v <= 100);
        CHECK(v >= prev);
        CHECK(v == oracle::intensity(x, max));
        prev = v;
      }
    }
  }

  TEST_CASE("vest layout puts each finger in its column") {
    VestCalibration vc{calib(1.0, 10.0, Finger::kThumb), calib(1.0, 10.0, Finger::kIndex),
                       calib(1.0, 10.0, Finger::kMiddle), calib(1.0, 10.0, Finger::kRing)};
    std::vector<ContactMetrics> ms{contact(Finger::kRing, 1.0, 10, 0.3),
                                   contact(Finger::kThumb, 0.0, 0, 0.1),
                                   contact(Finger::kMiddle, 0.5, 5, 0.2),
                                   contact(Finger::kIndex, 0.25, 2, 0.2)};
    const VestCommand v = build_vest_command(ms, vc);
    CHECK_FALSE(v.degraded);
    CHECK(v.timestamp == 0.3);
    for (int r = 0; r < kVestRows; ++r) {
      CHECK(v.front[r * 4 + 0] == 1);
      CHECK(v.front[r * 4 + 2] == 50);
      CHECK(v.front[r * 4 + 3] == 99);
      CHECK(v.back[r * 4 + 2] == 50);
      CHECK(v.back[r * 4 + 3] == 99);
      CHECK(v.front[r * 4 + 1] == oracle::intensity(0.25, 1.0));
      CHECK(v.back[r * 4 + 1] == oracle::intensity(2.0, 10.0));
    }
    CHECK(v.front_column(Finger::kRing) == 99);
  }

  TEST_CASE("no contact silences a finger unless configured otherwise") {
    VestCalibration vc{calib(1.0, 10.0, Finger::kThumb), calib(1.0, 10.0, Finger::kIndex),
                       calib(1.0, 10.0, Finger::kMiddle), calib(1.0, 10.0, Finger::kRing)};
    std::vector<ContactMetrics> ms;
    for (Finger f : kAllFingers) {
      ContactMetrics m;
      m.finger = f;
      ms.push_back(m);
    }
    const VestCommand silent = build_vest_command(ms, vc);
    for (int v : silent.front) CHECK(v == 0);
    for (int v : silent.back) CHECK(v == 0);
    HapticConfig floor;
    floor.zero_when_no_contact = false;
    const VestCommand floored = build_vest_command(ms, vc, floor);
    for (int v : floored.front) CHECK(v == 1);
  }

  TEST_CASE("missing or duplicate fingers") {
    VestCalibration vc{calib(1.0, 10.0, Finger::kThumb), calib(1.0, 10.0, Finger::kIndex),
                       calib(1.0, 10.0, Finger::kMiddle), calib(1.0, 10.0, Finger::kRing)};
    std::vector<ContactMetrics> ms{contact(Finger::kThumb, 1.0, 10)};
    const VestCommand v = build_vest_command(ms, vc);
    CHECK(v.degraded);
    CHECK(v.front[0] == 99);
    CHECK(v.front[1] == 0);
    ms.push_back(contact(Finger::kThumb, 0.5, 3));
    CHECK_THROWS_AS(build_vest_command(ms, vc), Error);
  }

  TEST_CASE("nearest-rank percentile") {
    CHECK(nearest_rank_percentile({1, 2, 3, 4, 5}, 100.0) == 5.0);
    CHECK(nearest_rank_percentile({1, 2, 3, 4, 5}, 20.0) == 1.0);
    CHECK(nearest_rank_percentile({1, 2, 3, 4, 5}, 21.0) == 2.0);
    CHECK(nearest_rank_percentile({7}, 0.1) == 7.0);
    CHECK_THROWS_AS(nearest_rank_percentile({}, 50.0), Error);
    CHECK_THROWS_AS(nearest_rank_percentile({1.0}, 0.0), Error);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    std::uniform_int_distribution<int> size(1, 200);
    std::uniform_real_distribution<double> pct(0.5, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v(static_cast<std::size_t>(size(rng)));
      for (double& x : v) x = val(rng);
      const double p = pct(rng);
      CHECK(nearest_rank_percentile(v, p) == oracle::percentile(v, p));
    }
  }

  TEST_CASE("calibration takes per-finger maxima over contact frames") {
    std::vector<ContactMetrics> stream;
    for (Finger f : kAllFingers) {
      const double scale = 1.0 + static_cast<double>(finger_slot(f));
      for (int i = 1; i <= 10; ++i) {
        stream.push_back(contact(f, 0.1 * i * scale, i * 3, 0.01 * i));
      }
    }
    ContactMetrics loud;
    loud.finger = Finger::kThumb;
    loud.cci = 1000.0;
    loud.eda = 1000;
    stream.push_back(loud);  // no contact, ignored
    const VestCalibration vc = calibrate(stream);
    for (Finger f : kAllFingers) {
      const double scale = 1.0 + static_cast<double>(finger_slot(f));
      CHECK(vc[finger_slot(f)].cci_max == doctest::Approx(scale));
      CHECK(vc[finger_slot(f)].eda_max == 30.0);
      CHECK(vc[finger_slot(f)].finger == f);
    }

    CalibrationOptions opts;
    opts.use_percentile = true;
    opts.percentile = 50.0;
    CHECK(calibrate_finger(stream, Finger::kIndex, opts).eda_max == 15.0);

    CalibrationOptions window;
    window.duration = 0.045;
    CHECK(calibrate_finger(stream, Finger::kThumb, window).eda_max == 15.0);
  }

  TEST_CASE("calibration without contact is an error") {
    std::vector<ContactMetrics> stream{contact(Finger::kThumb, 1.0, 3)};
    CHECK_THROWS_AS(calibrate(stream), Error);
    try {
      calibrate(stream);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCalibration);
    }
  }
}
