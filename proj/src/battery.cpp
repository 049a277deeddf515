#include "hems/battery.hpp"

#include <cmath>

#include "hems/error.hpp"
#include "hems/fit.hpp"

namespace hems {

void BatteryCellParams::validate() const {
  if (!(capacity_ah > 0.0)) throw ValidationError("cell capacity must be positive");
  if (!(i_min < 0.0 && i_max > 0.0)) throw ValidationError("cell current limits must straddle zero");
  if (!(temperature > 0.0)) throw ValidationError("cell temperature must be positive");
  if (ocv.empty() || r0.empty()) throw ValidationError("cell OCV and R0 curves are required");
  for (double v : ocv.ys()) {
    if (!(v > 0.0)) throw ValidationError("OCV must be positive");
  }
  for (double v : r0.ys()) {
    if (v < 0.0) throw ValidationError("R0 must be non-negative");
  }
  if (!(degradation.z > 0.0)) throw ValidationError("degradation exponent must be positive");
}

BatteryCellParams BatteryCellParams::default_cell() {
  BatteryCellParams cell;
  cell.ocv = PiecewiseLinear({0, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100},
                             {3.00, 3.30, 3.45, 3.55, 3.62, 3.67, 3.72, 3.80, 3.90, 4.00, 4.08, 4.18});
  cell.r0 = PiecewiseLinear({0, 10, 20, 50, 80, 100}, {0.060, 0.045, 0.040, 0.035, 0.036, 0.040});
  return cell;
}

void BatteryPackParams::validate() const {
  if (cell_count < 1) throw ValidationError("pack needs at least one cell");
  if (!(energy_kwh > 0.0) || !(price_per_kwh > 0.0)) throw ValidationError("pack energy and price must be positive");
}

BatteryState soc_step(const BatteryState& state, double current, double dt, const BatteryCellParams& cell) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  BatteryState next = state;
  next.soc = state.soc + 100.0 * dt * current / (3600.0 * cell.capacity_ah);
  if (next.soc < 0.0 || next.soc > 100.0) {
    throw DomainError("SOC " + std::to_string(next.soc) + " % outside [0, 100]");
  }
  next.ah_throughput = state.ah_throughput + std::abs(current) * dt / 3600.0;
  return next;
}

double terminal_voltage(double soc, double current, const BatteryCellParams& cell) {
  return cell.ocv(soc) + cell.r0(soc) * current;
}

double power_to_current_exact(double p_cell_w, double soc, const BatteryCellParams& cell) {
  const double v = cell.ocv(soc);
  const double r = cell.r0(soc);
  const double disc = v * v - 4.0 * r * p_cell_w;
  if (disc < 0.0) throw DomainError("power exceeds battery capability");
  // Discharge current magnitude (v - sqrt(disc)) / (2r), rewritten without the
  // cancellation; negated for the charging-positive convention.
  return -2.0 * p_cell_w / (v + std::sqrt(disc));
}

double max_discharge_power(double soc, const BatteryCellParams& cell) {
  const double v = cell.ocv(soc);
  const double r = cell.r0(soc);
  return r > 0.0 ? v * v / (4.0 * r) : INFINITY;
}

CurrentFit fit_current_surrogate(const BatteryCellParams& cell, double soc_lo, double soc_hi, double p_lo,
                                 double p_hi, int n_soc, int n_power) {
  if (n_soc < 10 || n_power < 10) throw FitError("current fit needs at least a 10 x 10 grid");
  if (!(soc_hi > soc_lo) || !(p_hi > p_lo)) throw FitError("current fit domain is empty");
  std::vector<double> pcol, scol, y;
  for (int a = 0; a < n_soc; ++a) {
    const double soc = soc_lo + (soc_hi - soc_lo) * a / (n_soc - 1);
    for (int b = 0; b < n_power; ++b) {
      const double p = p_lo + (p_hi - p_lo) * b / (n_power - 1);
      pcol.push_back(p);
      scol.push_back(soc);
      y.push_back(power_to_current_exact(p, soc, cell));
    }
  }
  const auto fit = least_squares({pcol, scol}, y);
  return {fit.coeffs[0], fit.coeffs[1], fit.r_squared, fit.max_abs_error};
}

double capacity_loss(double c_rate, double temperature, double ah, const DegradationParams& deg) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (c_rate < 0.0 || ah < 0.0) throw DomainError("C-rate and Ah throughput must be non-negative");
  const double ea = deg.a_c + deg.b_c * c_rate;
  return deg.m_table(c_rate) * std::exp(-ea / (deg.gas_constant * temperature)) * std::pow(ah, deg.z);
}

double ah_eol(double c_rate, double temperature, const DegradationParams& deg) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (c_rate < 0.0) throw DomainError("C-rate must be non-negative");
  const double ea = deg.a_c + deg.b_c * c_rate;
  const double k = deg.m_table(c_rate) * std::exp(-ea / (deg.gas_constant * temperature));
  return std::pow(20.0 / k, 1.0 / deg.z);
}

EolFit fit_eol_points(const std::vector<double>& c_rates, const std::vector<double>& inv_ah_eol) {
  const auto fit = fit_line(c_rates, inv_ah_eol);
  if (fit.coeffs[0] < 0.0) throw FitError("fitted end-of-life slope is negative; the cost would be concave");
  return {fit.coeffs[0], fit.coeffs[1], fit.r_squared};
}

EolFit fit_eol_surrogate(const DegradationParams& deg, double c_lo, double c_hi, double temperature, int samples) {
  if (samples < 4) throw FitError("end-of-life fit needs at least 4 C-rates");
  if (!(c_hi > c_lo)) throw FitError("end-of-life fit range is empty");
  std::vector<double> c, inv;
  for (int k = 0; k < samples; ++k) {
    const double rate = c_lo + (c_hi - c_lo) * k / (samples - 1);
    c.push_back(rate);
    inv.push_back(1.0 / ah_eol(rate, temperature, deg));
  }
  return fit_eol_points(c, inv);
}

double degradation_cost_step(double current, double dt, const BatterySurrogate& s, const BatteryCellParams& cell,
                             const BatteryPackParams& pack) {
  const double mag = std::abs(current);
  const double share = pack.energy_kwh * pack.price_per_kwh / pack.cell_count;
  return (s.a_d * mag * mag / cell.capacity_ah + s.b_d * mag) * (dt / 7200.0) * share;
}

double degradation_cost_throughput(double current, double dt, const BatterySurrogate& s,
                                   const BatteryCellParams& cell, const BatteryPackParams& pack) {
  const double mag = std::abs(current);
  const double delta_ah = mag * dt / 3600.0;
  const double inv_eol = s.a_d * (mag / cell.capacity_ah) + s.b_d;
  const double share = pack.energy_kwh * pack.price_per_kwh / pack.cell_count;
  return delta_ah * inv_eol / 2.0 * share;
}

double pack_degradation_cost(double current, double dt, const BatterySurrogate& s, const BatteryCellParams& cell,
                             const BatteryPackParams& pack) {
  return pack.cell_count * degradation_cost_step(current, dt, s, cell, pack);
}

BatterySurrogate fit_battery_surrogate(const BatteryCellParams& cell, double soc_lo, double soc_hi, double p_lo,
                                       double p_hi, int grid, double c_lo, double c_hi, int eol_samples) {
  BatterySurrogate s;
  const auto cur = fit_current_surrogate(cell, soc_lo, soc_hi, p_lo, p_hi, grid, grid);
  s.a_bat = cur.a_bat;
  s.b_bat = cur.b_bat;
  s.r_squared_current = cur.r_squared;
  s.max_abs_error_current = cur.max_abs_error;
  s.soc_lo = soc_lo;
  s.soc_hi = soc_hi;
  s.p_lo = p_lo;
  s.p_hi = p_hi;
  const auto eol = fit_eol_surrogate(cell.degradation, c_lo, c_hi, cell.temperature, eol_samples);
  s.a_d = eol.a_d;
  s.b_d = eol.b_d;
  s.r_squared_eol = eol.r_squared;
  s.c_lo = c_lo;
  s.c_hi = c_hi;
  s.temperature = cell.temperature;
  return s;
}

}  // namespace hems
