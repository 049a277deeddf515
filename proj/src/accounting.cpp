#include "hems/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "hems/csv.hpp"
#include "hems/error.hpp"

namespace hems {

CostBreakdown stack_step_cost(double p_kw, int on, double prev_p_kw, int prev_on, double dt, double h2_price,
                              const FcStackParams& stack, const DegradationRates& rates) {
  CostBreakdown c;
  c.h2 = on ? dt * h2_price * fuel_rate(p_kw, true, stack) : 0.0;
  c.fc_load_change = loss_load_change(p_kw - prev_p_kw, rates, stack);
  c.fc_on_off = loss_on_off(on != prev_on, rates, stack);
  c.fc_idling = loss_idling(p_kw, on != 0, dt, rates, stack);
  c.fc_high_load = loss_high_load(p_kw, dt, rates, stack);
  return c;
}

TruthSimulator::TruthSimulator(const SystemModel& model, double h2_price, double dt, double soc_initial,
                               std::vector<double> initial_power, std::vector<int> initial_on)
    : model_(&model), h2_price_(h2_price), soc_(soc_initial), power_(std::move(initial_power)),
      on_(std::move(initial_on)) {
  if (power_.size() != on_.size()) throw ValidationError("initial power and on-state lengths differ");
  trace_.dt = dt;
  trace_.n_stacks = static_cast<int>(power_.size());
  trace_.soc_initial = soc_initial;
  trace_.initial_power = power_;
  trace_.initial_on = on_;
}

const TraceStep& TruthSimulator::step(double demand_kw, double demand_raw_kw, std::span<const double> stack_power,
                                      std::span<const int> stack_on) {
  const std::size_t n = power_.size();
  if (stack_power.size() != n || stack_on.size() != n) throw ValidationError("stack count mismatch in step");
  const double dt = trace_.dt;
  TraceStep rec;
  rec.demand = demand_kw;
  rec.demand_raw = demand_raw_kw;
  double fc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& sp = model_->stack(static_cast<int>(j));
    // Solver output sits on the band edges only up to its tolerance.
    const double p = stack_on[j] ? std::clamp(stack_power[j], sp.p_min, sp.p_max) : 0.0;
    rec.cost += stack_step_cost(p, stack_on[j], power_[j], on_[j], dt, h2_price_, sp, model_->rates);
    rec.stack_power.push_back(p);
    rec.stack_on.push_back(stack_on[j]);
    fc += p;
  }
  rec.bat_power = demand_kw - fc;
  rec.bat_current = power_to_current_exact(model_->cell_power_w(rec.bat_power), soc_, model_->cell);
  BatteryState st;
  st.soc = soc_;
  st = soc_step(st, rec.bat_current, dt, model_->cell);
  rec.soc = st.soc;
  rec.cost.battery_degradation =
      pack_degradation_cost(rec.bat_current, dt, model_->surrogate, model_->cell, model_->pack);
  soc_ = st.soc;
  power_ = rec.stack_power;
  on_ = rec.stack_on;
  trace_.steps.push_back(std::move(rec));
  return trace_.steps.back();
}

CostBreakdown account_costs(const SimulationTrace& trace, const SystemModel& model, double h2_price) {
  CostBreakdown total;
  auto prev_p = trace.initial_power;
  auto prev_on = trace.initial_on;
  for (const auto& s : trace.steps) {
    for (int j = 0; j < trace.n_stacks; ++j) {
      total += stack_step_cost(s.stack_power[j], s.stack_on[j], prev_p[j], prev_on[j], trace.dt, h2_price,
                               model.stack(j), model.rates);
    }
    total.battery_degradation +=
        pack_degradation_cost(s.bat_current, trace.dt, model.surrogate, model.cell, model.pack);
    prev_p = s.stack_power;
    prev_on = s.stack_on;
  }
  return total;
}

SimulationTrace simulate_schedule(const Schedule& schedule, const SystemModel& model, double h2_price) {
  TruthSimulator sim(model, h2_price, schedule.dt, schedule.soc_initial, schedule.initial_power, schedule.initial_on);
  for (const auto& s : schedule.steps) sim.step(s.demand, s.demand, s.stack_power, s.stack_on);
  return sim.trace();
}

double surrogate_battery_cost(const Schedule& schedule, const SystemModel& model) {
  double c = 0.0;
  for (const auto& s : schedule.steps) {
    c += pack_degradation_cost(s.bat_current, schedule.dt, model.surrogate, model.cell, model.pack);
  }
  return c;
}

void save_trace_csv(const SimulationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t_s,demand_kw,demand_raw_kw";
  for (int j = 0; j < trace.n_stacks; ++j) out << ",p_fc_" << j + 1 << "_kw";
  for (int j = 0; j < trace.n_stacks; ++j) out << ",on_" << j + 1;
  out << ",p_bat_kw,i_bat_a,soc_pct,cost_battery,cost_h2,cost_idling,cost_high_load,cost_load_change,cost_on_off\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    out << trace.dt * static_cast<double>(k) << ',' << s.demand << ',' << s.demand_raw;
    for (double p : s.stack_power) out << ',' << p;
    for (int o : s.stack_on) out << ',' << o;
    out << ',' << s.bat_power << ',' << s.bat_current << ',' << s.soc << ',' << s.cost.battery_degradation << ','
        << s.cost.h2 << ',' << s.cost.fc_idling << ',' << s.cost.fc_high_load << ',' << s.cost.fc_load_change << ','
        << s.cost.fc_on_off << '\n';
  }
}

SimulationTrace load_trace_csv(const std::filesystem::path& path, double soc_initial) {
  const auto table = csv::read_numeric(path, 3, 10000);
  const std::size_t cols = table.header.size();
  if (cols < 12 || (cols - 12) % 2 != 0) throw ValidationError(path.string() + ": unexpected trace column count");
  SimulationTrace tr;
  tr.n_stacks = static_cast<int>((cols - 12) / 2);
  tr.soc_initial = soc_initial;
  tr.initial_power.assign(static_cast<std::size_t>(tr.n_stacks), 0.0);
  tr.initial_on.assign(static_cast<std::size_t>(tr.n_stacks), 0);
  if (table.rows.size() > 1) tr.dt = table.rows[1][0] - table.rows[0][0];
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    if (r.size() != cols) throw ParseError("wrong field count", table.line_numbers[k]);
    TraceStep s;
    s.demand = r[1];
    s.demand_raw = r[2];
    std::size_t c = 3;
    for (int j = 0; j < tr.n_stacks; ++j) s.stack_power.push_back(r[c++]);
    for (int j = 0; j < tr.n_stacks; ++j) s.stack_on.push_back(static_cast<int>(std::lround(r[c++])));
    s.bat_power = r[c++];
    s.bat_current = r[c++];
    s.soc = r[c++];
    s.cost.battery_degradation = r[c++];
    s.cost.h2 = r[c++];
    s.cost.fc_idling = r[c++];
    s.cost.fc_high_load = r[c++];
    s.cost.fc_load_change = r[c++];
    s.cost.fc_on_off = r[c++];
    tr.steps.push_back(std::move(s));
  }
  return tr;
}

}  // namespace hems
