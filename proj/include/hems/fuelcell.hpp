#pragma once

#include <filesystem>
#include <utility>
#include <vector>

namespace hems {

/// Half-width used to decide idle / high-load membership at the thresholds, kW.
inline constexpr double kBandTol = 1e-6;

struct FcStackParams {
  int cell_count = 500;
  double active_area = 280.0;  // cm^2
  double p_max = 70.0;         // kW
  double p_min = 14.0;
  double p_low = 14.0;
  double p_high = 56.0;
  // hydrogen flow kg/s = a p^2 + b p + c, p in kW
  double a_fc = 9.42e-8;
  double b_fc = 1.138e-5;
  double c_fc = 3.77e-5;
  double stack_cost = 70.0 * 960.0;  // $
  double v_drop_max = 70000.0;       // uV, basis for idling and high load
  // uV, basis for load-change and on/off events; stack-level by default
  // (500 cells x 70,000 uV).
  double v_drop_max_event = 3.5e7;

  void validate() const;
};

/// Voltage-decay rates per operating condition.
struct DegradationRates {
  double load_change = 1.79;  // uV/kW
  double on_off = 13.79;      // uV/event
  double idling = 8.66;       // uV/h
  double high_load = 10.0;    // uV/h

  void validate() const;
};

struct PolarizationParams {
  double gibbs_energy = 237180.0;  // J/mol
  double faraday = 96485.0;        // C/mol
  double temperature = 353.15;     // K
  double alpha = 8.6e-5;           // V/K (Tafel slope per kelvin)
  double beta = 0.05;              // V
  double i0 = 3e-6;                // A/cm^2
  double i_loss = 2e-3;            // A/cm^2
  double i_l = 1.5;                // A/cm^2
  double r_ohm = 0.1;              // ohm cm^2

  void validate() const;
};

/// Hydrogen mass flow, kg/s. Throws DomainError when on and outside the band.
double fuel_rate(double p_kw, bool on, const FcStackParams& params);

/// Electrical over chemical power at lower heating value `lhv` (J/kg).
double efficiency(double p_kw, const FcStackParams& params, double lhv = 1.2e8);

double polarization_voltage(double i_fc, const PolarizationParams& params);

struct FuelFit {
  double a = 0.0, b = 0.0, c = 0.0, r_squared = 0.0;
};

/// Quadratic least squares; if the leading coefficient comes out negative the
/// fit is redone with a = 0.
FuelFit fit_fuel_curve(const std::vector<std::pair<double, double>>& samples);

/// `p_kw,mdot_kg_per_s` CSV.
std::vector<std::pair<double, double>> load_fuel_samples(const std::filesystem::path& path);

/// $ per kW of load change.
double load_change_rate(const DegradationRates& rates, const FcStackParams& params);
/// $ per on/off event.
double on_off_cost(const DegradationRates& rates, const FcStackParams& params);
/// $ per second of idling.
double idling_rate(const DegradationRates& rates, const FcStackParams& params);
/// $ per second at high load.
double high_load_rate(const DegradationRates& rates, const FcStackParams& params);

bool is_idle(double p_kw, bool on, const FcStackParams& params);
bool is_high_load(double p_kw, const FcStackParams& params);

double loss_load_change(double delta_p, const DegradationRates& rates, const FcStackParams& params);
double loss_on_off(bool switched, const DegradationRates& rates, const FcStackParams& params);
double loss_idling(double p_kw, bool on, double dt, const DegradationRates& rates, const FcStackParams& params);
double loss_high_load(double p_kw, double dt, const DegradationRates& rates, const FcStackParams& params);

}  // namespace hems
