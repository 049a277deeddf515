#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "hems/cost.hpp"
#include "hems/formulation.hpp"

namespace hems {

struct TraceStep {
  double demand = 0.0;      // kW served, after curtailment
  double demand_raw = 0.0;  // kW requested
  std::vector<double> stack_power;
  std::vector<int> stack_on;
  double bat_power = 0.0;    // kW, discharge positive
  double bat_current = 0.0;  // A per cell, charge positive (exact model)
  double soc = 0.0;          // % at the end of the step
  CostBreakdown cost;
};

struct Curtailment {
  int step = 0;
  double requested_kw = 0.0;
  double applied_kw = 0.0;
};

struct SimulationTrace {
  double dt = 1.0;
  int n_stacks = 0;
  double soc_initial = 50.0;
  std::vector<double> initial_power;
  std::vector<int> initial_on;
  std::vector<TraceStep> steps;
  std::vector<Curtailment> curtailments;
};

/// Advances the exact battery and prices every step with the exact fuel
/// and degradation rules.
class TruthSimulator {
 public:
  TruthSimulator(const SystemModel& model, double h2_price, double dt, double soc_initial,
                 std::vector<double> initial_power, std::vector<int> initial_on);

  /// Applies one step. The battery covers the residual so balance holds by
  /// construction. Throws DomainError if the cell cannot deliver it.
  const TraceStep& step(double demand_kw, double demand_raw_kw, std::span<const double> stack_power,
                        std::span<const int> stack_on);

  double soc() const { return soc_; }
  const std::vector<double>& stack_power() const { return power_; }
  const std::vector<int>& stack_on() const { return on_; }
  const SimulationTrace& trace() const { return trace_; }
  SimulationTrace& trace() { return trace_; }

 private:
  const SystemModel* model_;
  double h2_price_;
  double soc_;
  std::vector<double> power_;
  std::vector<int> on_;
  SimulationTrace trace_;
};

/// Stack-side cost of one step for one stack.
CostBreakdown stack_step_cost(double p_kw, int on, double prev_p_kw, int prev_on, double dt, double h2_price,
                              const FcStackParams& stack, const DegradationRates& rates);

/// Category sums recomputed from the powers and currents held in the trace.
CostBreakdown account_costs(const SimulationTrace& trace, const SystemModel& model, double h2_price);

/// Replays a solver schedule through the truth models.
SimulationTrace simulate_schedule(const Schedule& schedule, const SystemModel& model, double h2_price);

/// Battery cost the surrogate assigns to a schedule (solver view).
double surrogate_battery_cost(const Schedule& schedule, const SystemModel& model);

/// Trace CSV: t_s, demand_kw, demand_raw_kw, p_fc_<j>..., on_<j>..., p_bat_kw,
/// i_bat_a, soc_pct, then one column per cost category.
void save_trace_csv(const SimulationTrace& trace, const std::filesystem::path& path);
SimulationTrace load_trace_csv(const std::filesystem::path& path, double soc_initial);

}  // namespace hems
