#include "hems/vehicle.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hems/csv.hpp"
#include "hems/error.hpp"

namespace hems {

void VehicleParams::validate() const {
  const double positives[] = {mass, gravity, frontal_area, rolling_coeff, drag_coeff, air_density};
  for (double v : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("vehicle parameters must be positive and finite");
  }
  for (double e : {eff_transmission, eff_machine, eff_regen}) {
    if (!(e > 0.0 && e <= 1.0)) throw ValidationError("vehicle efficiencies must lie in (0, 1]");
  }
}

void DriveCycle::validate() const {
  if (samples.empty()) throw ValidationError("no samples");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].v < 0.0) throw ValidationError("negative speed at sample " + std::to_string(k));
    if (k > 0 && !(samples[k].t > samples[k - 1].t)) {
      throw ValidationError("time not strictly increasing at sample " + std::to_string(k));
    }
  }
}

void PowerProfile::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("profile dt must be positive");
  for (double p : demand_kw) {
    if (!std::isfinite(p)) throw ValidationError("profile holds a non-finite demand");
  }
}

DriveCycle parse_drive_cycle(const std::string& text) {
  const auto table = csv::parse_numeric(text, 2, 3);
  DriveCycle cycle;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    CycleSample s{row[0], row[1], row.size() > 2 ? row[2] : 0.0};
    if (s.v < 0.0) {
      if (s.v > -1e-9) {
        cycle.warnings.push_back("line " + std::to_string(table.line_numbers[k]) + ": clamped speed " +
                                 std::to_string(s.v) + " to 0");
        s.v = 0.0;
      } else {
        throw ParseError("negative speed", table.line_numbers[k]);
      }
    }
    if (!cycle.samples.empty() && !(s.t > cycle.samples.back().t)) {
      throw ValidationError("line " + std::to_string(table.line_numbers[k]) + ": time not strictly increasing");
    }
    cycle.samples.push_back(s);
  }
  if (cycle.samples.empty()) throw ValidationError("no samples");
  return cycle;
}

DriveCycle load_drive_cycle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_drive_cycle(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

double wheel_power_w(double speed, double accel, double grade, const VehicleParams& p) {
  const double rolling = p.mass * p.gravity * p.rolling_coeff * speed * std::cos(grade);
  const double aero = 0.5 * p.drag_coeff * p.frontal_area * p.air_density * speed * speed * speed;
  const double inertia = p.mass * speed * accel;
  const double climb = p.mass * p.gravity * speed * std::sin(grade);
  return rolling + aero + inertia + climb;
}

double electrical_demand_w(double wheel_power, const VehicleParams& p) {
  if (wheel_power > 0.0) return wheel_power / (p.eff_transmission * p.eff_machine);
  return wheel_power * p.eff_regen;
}

PowerProfile power_demand(const DriveCycle& cycle, const VehicleParams& params) {
  cycle.validate();
  params.validate();
  const auto& s = cycle.samples;
  PowerProfile out;
  out.dt = s.size() > 1 ? s[1].t - s[0].t : 1.0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double step = s[k].t - s[k - 1].t;
    if (std::abs(step - out.dt) > 1e-9 * std::max(1.0, out.dt)) {
      throw ValidationError("drive cycle is not uniformly sampled at sample " + std::to_string(k));
    }
  }
  out.demand_kw.resize(s.size());
  double accel = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k + 1 < s.size()) accel = (s[k + 1].v - s[k].v) / out.dt;
    const double wheel = wheel_power_w(s[k].v, accel, s[k].grade, params);
    out.demand_kw[k] = electrical_demand_w(wheel, params) / 1000.0;
  }
  return out;
}

PowerProfile resample(const PowerProfile& profile, double dt_new) {
  if (!(dt_new > 0.0) || !std::isfinite(dt_new)) throw ValidationError("resample step must be positive and finite");
  profile.validate();
  PowerProfile out;
  out.dt = dt_new;
  const double duration = profile.duration();
  const auto n = static_cast<std::size_t>(std::llround(duration / dt_new));
  out.demand_kw.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Small bias keeps exact multiples on their own sample.
    auto src = static_cast<std::size_t>(std::floor(static_cast<double>(k) * dt_new / profile.dt + 1e-9));
    if (src >= profile.size()) src = profile.size() - 1;
    out.demand_kw.push_back(profile.demand_kw[src]);
  }
  return out;
}

void save_profile_csv(const PowerProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t_s,p_d_kw\n" << std::setprecision(17);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    out << profile.dt * static_cast<double>(k) << ',' << profile.demand_kw[k] << '\n';
  }
}

PowerProfile load_profile_csv(const std::filesystem::path& path) {
  const auto table = csv::read_numeric(path, 2, 2);
  if (table.rows.empty()) throw ValidationError(path.string() + ": no samples");
  PowerProfile p;
  p.dt = table.rows.size() > 1 ? table.rows[1][0] - table.rows[0][0] : 1.0;
  for (const auto& row : table.rows) p.demand_kw.push_back(row[1]);
  p.validate();
  return p;
}

}  // namespace hems
