#include <cmath>
#include <random>

#include "doctest.h"
#include "hems/battery.hpp"
#include "hems/error.hpp"

using namespace hems;

namespace {

BatteryCellParams flat_cell(double ocv, double r0) {
  BatteryCellParams c;
  c.ocv = PiecewiseLinear({0.0, 100.0}, {ocv, ocv});
  c.r0 = PiecewiseLinear({0.0, 100.0}, {r0, r0});
  return c;
}

// Discharge root of OCV*I - R0*I^2 = P by bisection on [0, OCV/(2 R0)].
double bisect_discharge(double ocv, double r0, double p) {
  double lo = 0.0, hi = ocv / (2.0 * r0);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (ocv * mid - r0 * mid * mid < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("coulomb counting") {
  const auto cell = BatteryCellParams::default_cell();
  BatteryState s;
  s.soc = 50.0;
  CHECK(soc_step(s, 0.0, 60.0, cell).soc == 50.0);
  // 100 * 60 * 3.84 / (3600 * 3.2) = 2.0
  CHECK(soc_step(s, 3.84, 60.0, cell).soc == doctest::Approx(52.0).epsilon(1e-12));
  CHECK(soc_step(s, 3.84, 60.0, cell).ah_throughput == doctest::Approx(3.84 / 60.0));
  CHECK_THROWS_AS(soc_step(s, 3.2, 3600.0, cell), DomainError);
}

TEST_CASE("terminal voltage") {
  const auto cell = flat_cell(3.3, 0.01);
  CHECK(terminal_voltage(50.0, 0.0, BatteryCellParams::default_cell()) == doctest::Approx(3.72));
  CHECK(terminal_voltage(50.0, -3.0, cell) == doctest::Approx(3.27));
  CHECK(terminal_voltage(50.0, 3.0, cell) == doctest::Approx(3.33));
}

TEST_CASE("exact current from power") {
  const auto cell = flat_cell(3.3, 0.01);
  CHECK(power_to_current_exact(0.0, 50.0, cell) == 0.0);
  const double oracle = bisect_discharge(3.3, 0.01, 9.9);
  CHECK(oracle == doctest::Approx(3.03).epsilon(1e-3));
  CHECK(power_to_current_exact(9.9, 50.0, cell) == doctest::Approx(-oracle).epsilon(1e-12));
  CHECK_THROWS_AS(power_to_current_exact(3.3 * 3.3 / 0.04 + 1.0, 50.0, cell), DomainError);
  // Zero resistance is plain P / V.
  CHECK(power_to_current_exact(6.6, 50.0, flat_cell(3.3, 0.0)) == doctest::Approx(-2.0));
}

TEST_CASE("current surrogate") {
  SUBCASE("constant OCV and zero resistance is exactly linear") {
    const auto fit = fit_current_surrogate(flat_cell(3.5, 0.0), 20, 90, -12, 12, 20, 20);
    CHECK(fit.a_bat == doctest::Approx(-1.0 / 3.5).epsilon(1e-12));
    CHECK(std::abs(fit.b_bat) < 1e-12);
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("default cell over the operating window") {
    const auto fit = fit_current_surrogate(BatteryCellParams::default_cell(), 20, 90, -12, 12, 30, 30);
    CHECK(fit.r_squared >= 0.98);
  }
  SUBCASE("a one-point grid cannot be fitted") {
    CHECK_THROWS_AS(fit_current_surrogate(BatteryCellParams::default_cell(), 20, 90, -12, 12, 1, 1), FitError);
  }
}

TEST_CASE("capacity loss") {
  const DegradationParams deg;
  CHECK(capacity_loss(2.0, 298.15, 0.0, deg) == 0.0);
  CHECK(deg.m_table(0.5) == 31630.0);
  CHECK(deg.m_table(2.0) == 21681.0);
  // tests/oracles/degradation_oracle.py
  CHECK(capacity_loss(2.0, 298.15, 1000.0, deg) == doctest::Approx(3.6469120568359141).epsilon(1e-12));
  CHECK(ah_eol(2.0, 298.15, deg) == doctest::Approx(22071.24015647198).epsilon(1e-12));
  SUBCASE("with a positive activation slope") {
    DegradationParams pos = deg;
    pos.b_c = 370.3;
    CHECK(capacity_loss(2.0, 298.15, 1000.0, pos) == doctest::Approx(2.01).epsilon(2e-3));
    CHECK(ah_eol(2.0, 298.15, pos) == doctest::Approx(6.5e4).epsilon(1e-2));
  }
}

TEST_CASE("end-of-life inverse identity and monotone scans") {
  const DegradationParams deg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c(0.5, 10.0), t(263.15, 318.15);
  for (int k = 0; k < 200; ++k) {
    const double cr = c(rng), tk = t(rng);
    CHECK(capacity_loss(cr, tk, ah_eol(cr, tk, deg), deg) == doctest::Approx(20.0).epsilon(1e-9));
  }
  double prev = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double loss = capacity_loss(3.0, 298.15, 100.0 * k, deg);
    CHECK(loss > prev);
    prev = loss;
  }
  // Past the last table node the pre-exponent rises and the activation term
  // falls, so life shortens with C-rate there.
  prev = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    const double eol = ah_eol(6.0 + 4.0 * k / 999.0, 298.15, deg);
    CHECK(eol < prev);
    prev = eol;
  }
}

TEST_CASE("end-of-life line") {
  SUBCASE("two points give the interpolating line") {
    const auto f = fit_eol_points({1.0, 3.0}, {2e-5, 6e-5});
    CHECK(f.a_d == doctest::Approx(2e-5));
    CHECK(std::abs(f.b_d) < 1e-18);
  }
  SUBCASE("default table gives a positive slope") {
    const auto f = fit_eol_surrogate(DegradationParams{}, 0.5, 10.0, 298.15, 20);
    CHECK(f.a_d > 0.0);
    std::vector<double> cs, ys;
    for (int k = 0; k < 7; ++k) {
      cs.push_back(0.5 + k);
      ys.push_back(f.a_d * cs.back() + f.b_d);
    }
    const auto g = fit_eol_points(cs, ys);
    CHECK(g.a_d == doctest::Approx(f.a_d).epsilon(1e-10));
    CHECK(g.b_d == doctest::Approx(f.b_d).epsilon(1e-10));
  }
  SUBCASE("a falling line is rejected") { CHECK_THROWS_AS(fit_eol_points({1.0, 2.0}, {2.0, 1.0}), FitError); }
}

TEST_CASE("degradation cost") {
  const auto cell = BatteryCellParams::default_cell();
  const BatteryPackParams pack;
  BatterySurrogate s;
  const auto f = fit_eol_surrogate(cell.degradation, 0.5, 10.0, cell.temperature, 20);
  s.a_d = f.a_d;
  s.b_d = f.b_d;
  CHECK(degradation_cost_step(0.0, 1.0, s, cell, pack) == 0.0);
  // 1C for an hour moves 3.2 Ah; cost is that over twice the end-of-life
  // throughput at 1C, times this cell's share of the pack value.
  const double share = 90.0 * 178.41 / 7594.0;
  const double direct = 3.2 / 2.0 * (s.a_d * 1.0 + s.b_d) * share;
  CHECK(degradation_cost_step(3.2, 3600.0, s, cell, pack) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(degradation_cost_throughput(-3.2, 3600.0, s, cell, pack) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(degradation_cost_step(2.0, 20.0, s, cell, pack) ==
        doctest::Approx(2.0 * degradation_cost_step(2.0, 10.0, s, cell, pack)).epsilon(1e-12));
  CHECK(pack_degradation_cost(2.0, 10.0, s, cell, pack) ==
        doctest::Approx(7594.0 * degradation_cost_step(2.0, 10.0, s, cell, pack)).epsilon(1e-12));
}
