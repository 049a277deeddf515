#include <cmath>

#include "doctest.h"
#include "hems/error.hpp"
#include "hems/fuelcell.hpp"

using namespace hems;

namespace {

// Stated-input stack for the degradation price examples.
FcStackParams priced(double v_drop_event) {
  FcStackParams s;
  s.stack_cost = 67200.0;
  s.v_drop_max = 70000.0;
  s.v_drop_max_event = v_drop_event;
  return s;
}

}  // namespace

TEST_CASE("fuel rate") {
  FcStackParams s;
  CHECK(fuel_rate(0.0, false, s) == 0.0);
  CHECK_THROWS_AS(fuel_rate(5.0, false, s), DomainError);
  s.a_fc = 1e-7;
  s.b_fc = 1.6e-5;
  s.c_fc = 2e-5;
  // 1e-7*1225 + 1.6e-5*35 + 2e-5
  CHECK(fuel_rate(35.0, true, s) == doctest::Approx(7.025e-4).epsilon(1e-12));
  CHECK_NOTHROW(fuel_rate(s.p_min, true, s));
  CHECK_NOTHROW(fuel_rate(s.p_max, true, s));
  CHECK_THROWS_AS(fuel_rate(s.p_max + 1.0, true, s), DomainError);
  CHECK_THROWS_AS(fuel_rate(s.p_min - 1.0, true, s), DomainError);
}

TEST_CASE("efficiency") {
  FcStackParams s;
  FcStackParams twice = s;
  twice.a_fc *= 2;
  twice.b_fc *= 2;
  twice.c_fc *= 2;
  CHECK(efficiency(30.0, twice) == doctest::Approx(efficiency(30.0, s) / 2.0).epsilon(1e-12));
  CHECK(efficiency(1e-6, s) < 1e-3);
  // Single interior maximum over the on-band.
  int turns = 0;
  double prev = efficiency(s.p_min, s), slope_prev = 0.0;
  for (int k = 1; k <= 500; ++k) {
    const double p = s.p_min + (s.p_max - s.p_min) * k / 500.0;
    const double e = efficiency(p, s);
    const double slope = e - prev;
    if (k > 1 && (slope > 0) != (slope_prev > 0)) ++turns;
    CHECK(!(k > 1 && slope > 0 && slope_prev <= 0));  // never rises after falling
    slope_prev = slope;
    prev = e;
  }
  CHECK(turns <= 1);
}

TEST_CASE("polarization curve") {
  PolarizationParams p;
  p.i_loss = p.i0;
  CHECK(polarization_voltage(0.0, p) == doctest::Approx(237180.0 / (2.0 * 96485.0)).epsilon(1e-14));
  const PolarizationParams d;
  double prev = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    const double v = polarization_voltage(d.i_l * 0.999 * k / 999.0, d);
    CHECK(v < prev);
    prev = v;
  }
  // At 0.999 i_l the concentration term is -beta ln(0.001), about 0.345 V.
  const double near = polarization_voltage(0.999 * d.i_l, d);
  CHECK(std::isfinite(near));
  const double open = 237180.0 / (2.0 * 96485.0);
  const double act = 8.6e-5 * 353.15 * std::log((0.999 * 1.5 + 2e-3) / 3e-6);
  CHECK(near == doctest::Approx(open - act - 0.1 * 0.999 * 1.5 + 0.05 * std::log(0.001)).epsilon(1e-12));
  CHECK_THROWS_AS(polarization_voltage(d.i_l, d), DomainError);
}

TEST_CASE("fuel curve fit") {
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < 20; ++k) {
    const double p = 5.0 + 3.0 * k;
    pts.emplace_back(p, 9e-8 * p * p + 1.2e-5 * p + 4e-5);
  }
  const auto f = fit_fuel_curve(pts);
  CHECK(f.a == doctest::Approx(9e-8).epsilon(1e-9));
  CHECK(f.b == doctest::Approx(1.2e-5).epsilon(1e-9));
  CHECK(f.c == doctest::Approx(4e-5).epsilon(1e-9));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_fuel_curve({{1.0, 1.0}, {2.0, 2.0}}), FitError);
  const auto shipped = fit_fuel_curve(load_fuel_samples(HEMS_DATA_DIR "/fuel_curve.csv"));
  CHECK(shipped.r_squared >= 0.99);
  CHECK(shipped.a >= 0.0);
}

TEST_CASE("load change price") {
  const DegradationRates r;
  const auto s = priced(3.25e7);
  CHECK(loss_load_change(0.0, r, s) == 0.0);
  CHECK(loss_load_change(10.0, r, s) == doctest::Approx(0.0370).epsilon(1e-3));
  CHECK(loss_load_change(10.0, r, s) == doctest::Approx(10.0 * 1.79 * 67200.0 / 3.25e7).epsilon(1e-14));
  CHECK(loss_load_change(-14.0, r, s) == doctest::Approx(2.0 * loss_load_change(7.0, r, s)).epsilon(1e-14));
}

TEST_CASE("on/off price") {
  const DegradationRates r;
  const auto s = priced(3.25e7);
  CHECK(loss_on_off(false, r, s) == 0.0);
  CHECK(loss_on_off(true, r, s) == doctest::Approx(0.0285).epsilon(2e-3));
  CHECK(loss_on_off(true, r, s) == doctest::Approx(13.79 * 67200.0 / 3.25e7).epsilon(1e-14));
}

TEST_CASE("idling price") {
  const DegradationRates r;
  const auto s = priced(3.5e7);
  CHECK(loss_idling(0.0, false, 600.0, r, s) == 0.0);
  CHECK(loss_idling(s.p_low, true, 600.0, r, s) == doctest::Approx(1.386).epsilon(1e-3));
  CHECK(loss_idling(s.p_low, true, 600.0, r, s) == doctest::Approx(600.0 * 8.66 / 3600.0 * 0.96).epsilon(1e-14));
  CHECK(loss_idling(s.p_high, true, 600.0, r, s) == 0.0);
}

TEST_CASE("high load price") {
  const DegradationRates r;
  const auto s = priced(3.5e7);
  CHECK(loss_high_load(s.p_high - 1.0, 1.0, r, s) == 0.0);
  CHECK(loss_high_load(s.p_max, 1.0, r, s) == doctest::Approx(10.0 / 3600.0 * 0.96).epsilon(1e-14));
  CHECK(loss_high_load(s.p_max, 3.0, r, s) == doctest::Approx(3.0 * loss_high_load(s.p_max, 1.0, r, s)));
}

TEST_CASE("band membership at the thresholds") {
  const FcStackParams s;
  CHECK(is_idle(s.p_low, true, s));
  CHECK(!is_idle(s.p_low, false, s));
  CHECK(!is_idle(s.p_low + kBandTol, true, s));
  CHECK(is_high_load(s.p_high, s));
  CHECK(is_high_load(s.p_high - kBandTol, s) == false);
}

TEST_CASE("parameter validation") {
  FcStackParams s;
  s.p_min = 30.0;
  s.p_low = 20.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  FcStackParams e;
  e.v_drop_max_event = 0.0;
  CHECK_THROWS_AS(e.validate(), ValidationError);
  DegradationRates r;
  r.idling = -1.0;
  CHECK_THROWS_AS(r.validate(), ValidationError);
}
