#include "hems/fuelcell.hpp"

#include <cmath>

#include "hems/csv.hpp"
#include "hems/error.hpp"
#include "hems/fit.hpp"

namespace hems {

void FcStackParams::validate() const {
  if (!(p_min > 0.0 && p_min <= p_low && p_low < p_high && p_high <= p_max)) {
    throw ValidationError("stack thresholds must satisfy 0 < p_min <= p_low < p_high <= p_max");
  }
  if (a_fc < 0.0) throw ValidationError("fuel curve must be convex (a_fc >= 0)");
  if (c_fc < 0.0) throw ValidationError("fuel curve idle flow c_fc must be non-negative");
  if (!(stack_cost > 0.0) || !(v_drop_max > 0.0) || !(v_drop_max_event > 0.0)) throw ValidationError("stack cost and V_drop_max must be positive");
  if (cell_count < 1 || !(active_area > 0.0)) throw ValidationError("stack geometry must be positive");
}

void DegradationRates::validate() const {
  if (load_change < 0.0 || on_off < 0.0 || idling < 0.0 || high_load < 0.0) {
    throw ValidationError("degradation rates must be non-negative");
  }
}

void PolarizationParams::validate() const {
  if (!(i0 > 0.0) || !(i_l > 0.0) || r_ohm < 0.0 || !(temperature > 0.0)) {
    throw ValidationError("polarization parameters out of range");
  }
}

double fuel_rate(double p_kw, bool on, const FcStackParams& params) {
  if (!on) {
    if (p_kw != 0.0) throw DomainError("stack is off but carries power");
    return 0.0;
  }
  if (p_kw < params.p_min - 1e-9 || p_kw > params.p_max + 1e-9) {
    throw DomainError("stack power " + std::to_string(p_kw) + " kW outside its on-band");
  }
  return params.a_fc * p_kw * p_kw + params.b_fc * p_kw + params.c_fc;
}

double efficiency(double p_kw, const FcStackParams& params, double lhv) {
  const double flow = params.a_fc * p_kw * p_kw + params.b_fc * p_kw + params.c_fc;
  if (!(flow > 0.0)) throw DomainError("zero fuel rate");
  return p_kw * 1000.0 / (flow * lhv);
}

double polarization_voltage(double i_fc, const PolarizationParams& p) {
  if (i_fc < 0.0) throw DomainError("negative current density");
  if (i_fc >= p.i_l) throw DomainError("beyond limiting current");
  if (!(i_fc + p.i_loss > 0.0)) throw DomainError("current plus crossover must be positive");
  const double open = p.gibbs_energy / (2.0 * p.faraday);
  const double act = p.alpha * p.temperature * std::log((i_fc + p.i_loss) / p.i0);
  const double ohm = p.r_ohm * i_fc;
  const double conc = -p.beta * std::log(1.0 - i_fc / p.i_l);
  return open - act - ohm - conc;
}

FuelFit fit_fuel_curve(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw FitError("fuel fit needs at least 3 samples");
  std::vector<double> p2, p1, ones, y;
  for (const auto& [p, m] : samples) {
    p2.push_back(p * p);
    p1.push_back(p);
    ones.push_back(1.0);
    y.push_back(m);
  }
  auto fit = least_squares({p2, p1, ones}, y);
  FuelFit out{fit.coeffs[0], fit.coeffs[1], fit.coeffs[2], fit.r_squared};
  if (out.a < 0.0) {
    auto lin = least_squares({p1, ones}, y);
    out = {0.0, lin.coeffs[0], lin.coeffs[1], lin.r_squared};
  }
  return out;
}

std::vector<std::pair<double, double>> load_fuel_samples(const std::filesystem::path& path) {
  const auto table = csv::read_numeric(path, 2, 2);
  std::vector<std::pair<double, double>> out;
  for (const auto& row : table.rows) out.emplace_back(row[0], row[1]);
  return out;
}

double load_change_rate(const DegradationRates& rates, const FcStackParams& params) {
  return rates.load_change * params.stack_cost / params.v_drop_max_event;
}

double on_off_cost(const DegradationRates& rates, const FcStackParams& params) {
  return rates.on_off * params.stack_cost / params.v_drop_max_event;
}

double idling_rate(const DegradationRates& rates, const FcStackParams& params) {
  return rates.idling * params.stack_cost / (3600.0 * params.v_drop_max);
}

double high_load_rate(const DegradationRates& rates, const FcStackParams& params) {
  return rates.high_load * params.stack_cost / (3600.0 * params.v_drop_max);
}

// Membership is decided at half the band tolerance so that values sitting on
// the optimizer's threshold rows classify the same way as the optimizer.
bool is_idle(double p_kw, bool on, const FcStackParams& params) {
  return on && p_kw <= params.p_low + 0.5 * kBandTol;
}

bool is_high_load(double p_kw, const FcStackParams& params) { return p_kw >= params.p_high - 0.5 * kBandTol; }

double loss_load_change(double delta_p, const DegradationRates& rates, const FcStackParams& params) {
  return std::abs(delta_p) * load_change_rate(rates, params);
}

double loss_on_off(bool switched, const DegradationRates& rates, const FcStackParams& params) {
  return switched ? on_off_cost(rates, params) : 0.0;
}

double loss_idling(double p_kw, bool on, double dt, const DegradationRates& rates, const FcStackParams& params) {
  return is_idle(p_kw, on, params) ? dt * idling_rate(rates, params) : 0.0;
}

double loss_high_load(double p_kw, double dt, const DegradationRates& rates, const FcStackParams& params) {
  return is_high_load(p_kw, params) ? dt * high_load_rate(rates, params) : 0.0;
}

}  // namespace hems
