#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "hems/error.hpp"
#include "hems/vehicle.hpp"

using namespace hems;

TEST_CASE("empty cycle text is rejected") {
  CHECK_THROWS_WITH_AS(parse_drive_cycle(""), "no samples", ValidationError);
  CHECK_THROWS_WITH_AS(parse_drive_cycle("t_s,v_mps\n"), "no samples", ValidationError);
}

TEST_CASE("headerless two-row cycle") {
  const auto c = parse_drive_cycle("0,0\n1,0");
  REQUIRE(c.samples.size() == 2);
  CHECK(c.samples[0].v == 0.0);
  CHECK(c.samples[1].t == 1.0);
}

TEST_CASE("malformed cycle rows name their line") {
  try {
    parse_drive_cycle("t_s,v_mps\n0,1\n1,abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_drive_cycle("t_s,v_mps\n0,1\n1,-2\n"), ParseError);
  CHECK_THROWS_AS(parse_drive_cycle("t_s,v_mps\n0,1\n0,2\n"), ValidationError);
}

TEST_CASE("rounding noise below zero speed is clamped with a warning") {
  const auto c = parse_drive_cycle("t_s,v_mps\n0,-1e-12\n1,2\n");
  CHECK(c.samples[0].v == 0.0);
  CHECK(c.warnings.size() == 1);
}

TEST_CASE("standing still needs no power") {
  DriveCycle c;
  for (int k = 0; k < 10; ++k) c.samples.push_back({static_cast<double>(k), 0.0, 0.0});
  const auto p = power_demand(c, VehicleParams{});
  for (double d : p.demand_kw) CHECK(d == 0.0);
}

TEST_CASE("steady 10 m/s on the flat") {
  const VehicleParams v;
  // rolling 13500*9.8*0.018*10 + drag 0.5*0.7*7.5*1.29*1000
  const double wheel = 23814.0 + 3386.25;
  CHECK(wheel_power_w(10.0, 0.0, 0.0, v) == doctest::Approx(wheel).epsilon(1e-12));
  CHECK(wheel / 1000.0 == doctest::Approx(27.20).epsilon(1e-3));
  CHECK(electrical_demand_w(wheel, v) / 1000.0 == doctest::Approx(35.56).epsilon(1e-3));
  CHECK(electrical_demand_w(wheel, v) == doctest::Approx(wheel / (0.9 * 0.85)).epsilon(1e-12));
}

TEST_CASE("braking recovers half through the regen path") {
  CHECK(electrical_demand_w(-10000.0, VehicleParams{}) == doctest::Approx(-5000.0));
}

TEST_CASE("shipped cycle is 600 s at 1 s with a peak between 250 and 350 kW") {
  const auto c = load_drive_cycle(HEMS_DATA_DIR "/cycle_city_bus.csv");
  CHECK(c.samples.size() == 600);
  const auto p = power_demand(c, VehicleParams{});
  CHECK(p.dt == 1.0);
  double peak = -1e300;
  for (double d : p.demand_kw) peak = std::max(peak, d);
  CHECK(peak >= 250.0);
  CHECK(peak <= 350.0);
}

TEST_CASE("non-uniform sampling is rejected") {
  const auto c = parse_drive_cycle("t_s,v_mps\n0,1\n1,1\n3,1\n");
  CHECK_THROWS_AS(power_demand(c, VehicleParams{}), ValidationError);
}

TEST_CASE("resampling") {
  PowerProfile p;
  p.dt = 1.0;
  for (int k = 0; k < 600; ++k) p.demand_kw.push_back(0.5 * k - 7.0);
  SUBCASE("same step is the identity") {
    const auto q = resample(p, 1.0);
    CHECK(q.demand_kw == p.demand_kw);
  }
  SUBCASE("10 s steps keep the first sample of each window") {
    const auto q = resample(p, 10.0);
    REQUIRE(q.size() == 60);
    CHECK(q.dt == 10.0);
    for (std::size_t k = 0; k < 60; ++k) CHECK(q.demand_kw[k] == p.demand_kw[10 * k]);
  }
  SUBCASE("zero step is an error") { CHECK_THROWS_AS(resample(p, 0.0), ValidationError); }
}

TEST_CASE("profile CSV round trip is exact") {
  PowerProfile p;
  p.dt = 1.0;
  p.demand_kw = {0.1, -3.25, 1.0 / 3.0, 310.0};
  const auto path = std::filesystem::temp_directory_path() / "hems_profile_rt.csv";
  save_profile_csv(p, path);
  const auto q = load_profile_csv(path);
  CHECK(q.dt == p.dt);
  CHECK(q.demand_kw == p.demand_kw);
  std::filesystem::remove(path);
}
