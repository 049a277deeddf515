#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hems {

/// Longitudinal parameters of the city bus. Defaults are the published bus.
struct VehicleParams {
  double mass = 13500.0;         // kg
  double gravity = 9.8;          // m/s^2
  double frontal_area = 7.5;     // m^2
  double rolling_coeff = 0.018;
  double drag_coeff = 0.7;
  double air_density = 1.29;     // kg/m^3
  double eff_transmission = 0.90;
  double eff_machine = 0.85;
  double eff_regen = 0.50;

  void validate() const;
};

struct CycleSample {
  double t = 0.0;      // s
  double v = 0.0;      // m/s
  double grade = 0.0;  // rad
};

struct DriveCycle {
  std::vector<CycleSample> samples;
  std::vector<std::string> warnings;  // e.g. clamped rounding noise

  void validate() const;
};

/// Electrical demand on a uniform time grid.
struct PowerProfile {
  double dt = 1.0;                 // s
  std::vector<double> demand_kw;   // positive = traction, negative = regen

  std::size_t size() const { return demand_kw.size(); }
  double duration() const { return dt * static_cast<double>(demand_kw.size()); }
  void validate() const;
};

DriveCycle parse_drive_cycle(const std::string& text);
DriveCycle load_drive_cycle(const std::filesystem::path& path);

/// Mechanical power at the wheel, W.
double wheel_power_w(double speed, double accel, double grade, const VehicleParams& params);

/// Electrical demand for a given wheel power, W in and W out.
double electrical_demand_w(double wheel_power, const VehicleParams& params);

/// Demand profile in kW. The cycle must be uniformly sampled; acceleration is
/// the forward difference, with the last step repeating the previous one.
PowerProfile power_demand(const DriveCycle& cycle, const VehicleParams& params);

/// Zero-order-hold resampling: step k of the result takes the input sample at
/// time k*dt_new.
PowerProfile resample(const PowerProfile& profile, double dt_new);

/// `t_s,p_d_kw` CSV.
void save_profile_csv(const PowerProfile& profile, const std::filesystem::path& path);
PowerProfile load_profile_csv(const std::filesystem::path& path);

}  // namespace hems
