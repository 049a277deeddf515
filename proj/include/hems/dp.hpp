#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hems/accounting.hpp"
#include "hems/formulation.hpp"

namespace hems {

struct DpGrids {
  double soc_step = 0.02;   // %
  double power_step = 5.0;  // kW, collective
  // Limit the SOC axis to states reachable from the initial SOC within the
  // horizon at the current limits. Exact, only smaller.
  bool reachable_only = false;

  void validate() const;
};

/// Value and control tables. Index order is [t][soc][prev power].
struct DpPolicy {
  int n_steps = 0;
  int n_stacks = 0;
  double dt = 1.0;
  std::vector<double> soc_grid;    // %
  std::vector<double> power_grid;  // collective kW; index 0 is off
  std::vector<double> value;       // (n_steps + 1) x soc x power
  std::vector<std::int16_t> control;  // n_steps x soc x power, -1 = no feasible control

  std::size_t n_soc() const { return soc_grid.size(); }
  std::size_t n_power() const { return power_grid.size(); }
  std::size_t index(int t, std::size_t s, std::size_t p) const {
    return (static_cast<std::size_t>(t) * n_soc() + s) * n_power() + p;
  }
  double v(int t, std::size_t s, std::size_t p) const { return value[index(t, s, p)]; }
};

struct StageEval {
  bool feasible = false;
  double next_soc = 0.0;
  double current = 0.0;
  CostBreakdown cost;
};

struct DpResult {
  double cost = 0.0;  // value at the initial state
  double wall_time = 0.0;
  long transitions = 0;
};

struct DpRollout {
  SimulationTrace trace;
  CostBreakdown cost;
};

/// Collective-stack dynamic programming over (SOC, previous FC power).
class DpBenchmark {
 public:
  DpBenchmark(std::span<const double> demand, const SystemModel& model, const HorizonSpec& horizon,
              const DpGrids& grids);

  /// Backward induction. Throws InfeasibleError when the initial state has
  /// no finite value.
  DpResult solve();

  /// Cost and successor of applying collective power index u at time t.
  StageEval stage(int t, double soc, std::size_t prev, std::size_t u) const;
  /// V(t+1) linearly interpolated in SOC; infinite unless both neighbours are finite.
  double interpolate(int t, double soc, std::size_t prev) const;
  /// Right-hand side of the Bellman equation re-evaluated from scratch.
  double bellman_rhs(int t, std::size_t s, std::size_t prev) const;

  /// Forward simulation on the truth models with one-step lookahead on the
  /// value table at the actual SOC. Throws DomainError naming the step if the
  /// state leaves the grid.
  DpRollout rollout() const;

  const DpPolicy& policy() const { return policy_; }
  std::size_t initial_power_index() const { return init_power_; }

 private:
  std::vector<double> demand_;
  const SystemModel* model_;
  HorizonSpec horizon_;
  DpGrids grids_;
  DpPolicy policy_;
  std::size_t init_power_ = 0;
  double k_soc_ = 0.0;
};

/// Little-endian dump: int64 {n_steps + 1, n_soc, n_power}, then the value
/// table as row-major float64 (infinite entries kept as IEEE inf).
void save_value_tables(const DpPolicy& policy, const std::filesystem::path& path);

}  // namespace hems
