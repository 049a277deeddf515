#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hems/battery.hpp"
#include "hems/cost.hpp"
#include "hems/fuelcell.hpp"
#include "hems/problem.hpp"
#include "hems/vehicle.hpp"

namespace hems {

enum class StackControl { kIndividual, kCollective };

std::string to_string(StackControl mode);
StackControl stack_control_from_string(const std::string& s);

/// One optimization window.
struct HorizonSpec {
  int n_steps = 600;
  double dt = 1.0;
  int n_stacks = 8;
  StackControl mode = StackControl::kIndividual;
  double soc_initial = 50.0;
  double soc_final_min = 47.0;
  double soc_final_max = 53.0;
  double soc_min = 20.0;
  double soc_max = 90.0;
  double h2_price = 4.0;  // $/kg
  std::vector<double> initial_power;  // kW per stack; empty = all 0
  std::vector<int> initial_on;        // per stack; empty = all off

  double prev_power(int stack) const { return initial_power.empty() ? 0.0 : initial_power[stack]; }
  int prev_on(int stack) const { return initial_on.empty() ? 0 : initial_on[stack]; }
  void validate() const;
};

/// Physical models shared by the optimizer, the DP and the truth simulation.
struct SystemModel {
  BatteryCellParams cell = BatteryCellParams::default_cell();
  BatteryPackParams pack;
  BatterySurrogate surrogate;
  std::vector<FcStackParams> stacks{FcStackParams{}};  // one entry per stack, or one shared entry
  DegradationRates rates;

  const FcStackParams& stack(int j) const { return stacks.size() == 1 ? stacks[0] : stacks[j]; }
  bool homogeneous() const;
  /// Cell power in W for a pack power in kW.
  double cell_power_w(double pack_kw) const { return pack_kw * 1000.0 / pack.cell_count; }
  /// SOC change per ampere-step, % / A.
  double soc_per_amp(double dt) const { return 100.0 * dt / (3600.0 * cell.capacity_ah); }
};

/// Column indices. Per step the stack blocks come first (7 columns each:
/// power, ramp, on, switch, high, idle, idle_aux) followed by the 4 battery
/// columns (power, current, |current|, soc). In collective mode there is one
/// stack block standing for all stacks.
struct VariableLayout {
  int n_steps = 0;
  int n_units = 0;   // stack blocks per step
  int n_stacks = 0;  // physical stacks
  static constexpr int kStackVars = 7;
  static constexpr int kBatteryVars = 4;

  int step_size() const { return kStackVars * n_units + kBatteryVars; }
  int total() const { return n_steps * step_size(); }
  int stack_base(int t, int u) const { return t * step_size() + kStackVars * u; }
  int power(int t, int u) const { return stack_base(t, u); }
  int ramp(int t, int u) const { return stack_base(t, u) + 1; }
  int on(int t, int u) const { return stack_base(t, u) + 2; }
  int sw(int t, int u) const { return stack_base(t, u) + 3; }
  int high(int t, int u) const { return stack_base(t, u) + 4; }
  int idle(int t, int u) const { return stack_base(t, u) + 5; }
  int idle_aux(int t, int u) const { return stack_base(t, u) + 6; }
  int battery_base(int t) const { return t * step_size() + kStackVars * n_units; }
  int bat_power(int t) const { return battery_base(t); }
  int bat_current(int t) const { return battery_base(t) + 1; }
  int bat_abs(int t) const { return battery_base(t) + 2; }
  int soc(int t) const { return battery_base(t) + 3; }
  /// Unit (stack block) that drives physical stack j.
  int unit_of(int stack) const { return n_units == 1 ? 0 : stack; }
  /// Stacks represented by one unit block.
  int multiplicity() const { return n_units == 1 ? n_stacks : 1; }
};

/// Objective coefficients in $ per unit of the decision variables.
struct CostRates {
  double fuel_q = 0, fuel_lin = 0, fuel_on = 0;  // per represented stack
  double ramp = 0, on_off = 0, idle = 0, high = 0;
  double bat_q = 0, bat_lin = 0;
};

struct BuiltProblem {
  MiqpProblem problem;
  VariableLayout layout;
  HorizonSpec horizon;
  std::vector<double> demand_kw;
  std::vector<CostRates> unit_rates;  // per unit block, already scaled by multiplicity
  CostRates battery_rates;
};

/// Builds the window problem. `demand` must hold exactly horizon.n_steps values.
BuiltProblem build(std::span<const double> demand, const HorizonSpec& horizon, const SystemModel& model);

struct Finding {
  std::string kind;  // convexity | coverage | bounds | labels
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
};

ValidationReport validate(const MiqpProblem& problem);

/// Surrogate-model cost categories of a solution vector, over the first
/// `steps` steps (all when negative).
CostBreakdown objective_terms(const BuiltProblem& built, std::span<const double> x, int steps = -1);

struct StepRecord {
  double demand = 0.0;
  std::vector<double> stack_power;  // per physical stack
  std::vector<int> stack_on;
  double bat_power = 0.0;    // kW, discharge positive
  double bat_current = 0.0;  // A per cell (surrogate for schedules, exact for traces)
  double soc = 0.0;          // % at the end of the step
};

struct Schedule {
  double dt = 1.0;
  int n_stacks = 0;
  double soc_initial = 0.0;
  std::vector<double> initial_power;
  std::vector<int> initial_on;
  std::vector<StepRecord> steps;
};

/// Rounds binaries, re-checks gating and returns per-stack records. Throws
/// ValidationError naming the offending row or column.
Schedule extract_schedule(const BuiltProblem& built, std::span<const double> x, double integrality_tol = 1e-6);

/// Plain-text listing of every row with its label.
void dump(const MiqpProblem& problem, std::ostream& out);

}  // namespace hems
