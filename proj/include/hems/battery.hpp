#pragma once

#include "hems/curve.hpp"

namespace hems {

/// Empirical capacity-fade model: loss% = M(c) * exp(-(a_c + b_c c) / (R T)) * Ah^z.
struct DegradationParams {
  double a_c = 31700.0;          // J/mol
  double b_c = -370.3;           // J/mol per C; sign gives shorter life at higher C
  double z = 0.55;
  double gas_constant = 8.314;   // J/(mol K)
  PiecewiseLinear m_table{{0.5, 2.0, 6.0, 10.0}, {31630.0, 21681.0, 12934.0, 15512.0},
                          PiecewiseLinear::OutOfRange::kClamp};
};

struct BatteryCellParams {
  double capacity_ah = 3.2;
  PiecewiseLinear ocv;   // SOC% -> V
  PiecewiseLinear r0;    // SOC% -> ohm
  double i_min = -3.84;  // A, discharge limit
  double i_max = 3.84;   // A, charge limit
  double temperature = 298.15;  // K
  DegradationParams degradation;

  double capacity_as() const { return capacity_ah * 3600.0; }
  void validate() const;

  /// Shipped NMC-like 3.2 Ah cell curves.
  static BatteryCellParams default_cell();
};

struct BatteryPackParams {
  int cell_count = 7594;
  double energy_kwh = 90.0;
  double price_per_kwh = 178.41;

  void validate() const;
};

struct BatteryState {
  double soc = 50.0;            // %
  double ah_throughput = 0.0;   // Ah
  double q_loss = 0.0;          // %
  double soh = 100.0;           // %
};

/// Linear maps that make the battery usable inside the MIQP.
struct BatterySurrogate {
  // current [A] = a_bat * cell power [W] + b_bat * SOC [%]
  double a_bat = 0.0;
  double b_bat = 0.0;
  double r_squared_current = 0.0;
  double max_abs_error_current = 0.0;
  double soc_lo = 20.0, soc_hi = 90.0;
  double p_lo = -12.0, p_hi = 12.0;  // W per cell
  // 1 / Ah_EOL = a_d * C-rate + b_d
  double a_d = 0.0;
  double b_d = 0.0;
  double r_squared_eol = 0.0;
  double c_lo = 0.5, c_hi = 10.0;
  double temperature = 298.15;

  double current(double p_cell_w, double soc) const { return a_bat * p_cell_w + b_bat * soc; }
};

/// Coulomb counting with positive current charging. Throws DomainError when
/// the result leaves [0, 100].
BatteryState soc_step(const BatteryState& state, double current, double dt, const BatteryCellParams& cell);

double terminal_voltage(double soc, double current, const BatteryCellParams& cell);

/// Exact Rint current for a cell power (W, positive = discharge). The result
/// follows the charging-positive convention, so discharge gives I < 0. Uses
/// the cancellation-free root, valid for R0 = 0 too.
double power_to_current_exact(double p_cell_w, double soc, const BatteryCellParams& cell);

/// Largest discharge power the cell can deliver at this SOC, W.
double max_discharge_power(double soc, const BatteryCellParams& cell);

struct CurrentFit {
  double a_bat = 0.0, b_bat = 0.0, r_squared = 0.0, max_abs_error = 0.0;
};

/// Least-squares I = a*P + b*SOC (no intercept) over a soc x power grid.
CurrentFit fit_current_surrogate(const BatteryCellParams& cell, double soc_lo, double soc_hi, double p_lo,
                                 double p_hi, int n_soc, int n_power);

/// Capacity loss in percent.
double capacity_loss(double c_rate, double temperature, double ah, const DegradationParams& deg);

/// Ah throughput at 20 % capacity loss.
double ah_eol(double c_rate, double temperature, const DegradationParams& deg);

struct EolFit {
  double a_d = 0.0, b_d = 0.0, r_squared = 0.0;
};

/// Least-squares 1/Ah_EOL = a_d*c + b_d on `samples` evenly spaced C-rates.
/// Rejects a_d < 0 with FitError since the cost would turn concave.
EolFit fit_eol_surrogate(const DegradationParams& deg, double c_lo, double c_hi, double temperature, int samples);
EolFit fit_eol_points(const std::vector<double>& c_rates, const std::vector<double>& inv_ah_eol);

/// Per-cell degradation cost of one step from the quadratic form. The pack
/// price is shared across cells, so the pack cost is cell_count times this.
double degradation_cost_step(double current, double dt, const BatterySurrogate& s, const BatteryCellParams& cell,
                             const BatteryPackParams& pack);

/// Same cost from Ah throughput over twice the fitted end-of-life throughput.
double degradation_cost_throughput(double current, double dt, const BatterySurrogate& s,
                                   const BatteryCellParams& cell, const BatteryPackParams& pack);

/// Whole-pack cost: cell_count * degradation_cost_step.
double pack_degradation_cost(double current, double dt, const BatterySurrogate& s, const BatteryCellParams& cell,
                             const BatteryPackParams& pack);

/// Fit both surrogates on the given domain.
BatterySurrogate fit_battery_surrogate(const BatteryCellParams& cell, double soc_lo, double soc_hi, double p_lo,
                                       double p_hi, int grid, double c_lo, double c_hi, int eol_samples);

}  // namespace hems
