#pragma once

#include <string>
#include <vector>

#include "hems/accounting.hpp"
#include "hems/error.hpp"
#include "hems/formulation.hpp"
#include "hems/miqp.hpp"
#include "hems/vehicle.hpp"

namespace hems {

enum class HorizonPolicy { kShrinking, kRolling };
std::string to_string(HorizonPolicy p);
HorizonPolicy horizon_policy_from_string(const std::string& s);

struct MpcConfig {
  double horizon_s = 600.0;
  double block_s = 60.0;
  HorizonPolicy policy = HorizonPolicy::kShrinking;
  bool curtail = true;
  // Regen is clipped to this share of the worst-case charge limit so the
  // linear current model keeps some room against the exact one.
  double curtail_margin = 0.95;
  // Individual control: seed each block with the best k-stack collective plan.
  bool group_hint = true;
  double group_time_limit = 10.0;  // s per collective sub-solve

  void validate(double dt) const;
};

/// Raised when a block cannot be solved; carries the solver status.
class SolveFailure : public Error {
 public:
  SolveFailure(const std::string& what, MiqpStatus status) : Error(what), status_(status) {}
  MiqpStatus status() const noexcept { return status_; }

 private:
  MiqpStatus status_;
};

struct BlockReport {
  int start_step = 0;
  int window_steps = 0;
  int applied_steps = 0;
  MiqpStatus status = MiqpStatus::kInfeasible;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  double wall_time = 0.0;
  long nodes = 0;
  std::string incumbent_source;
  bool recovered = false;  // terminal window widened after an infeasible solve
  double soc_start = 0.0;
  std::vector<double> power_start;  // per stack, as handed to the build
  std::vector<int> on_start;
};

struct MpcResult {
  SimulationTrace trace;
  CostBreakdown cost;  // truth accounting of the applied steps
  std::vector<BlockReport> blocks;
  double wall_time = 0.0;
  double surrogate_cost = 0.0;  // solver objective restricted to applied steps
  double surrogate_battery = 0.0;
  StackControl mode = StackControl::kIndividual;
};

/// Regen beyond the worst-case charge capability of the linear current model
/// is clipped. Returns the served profile and logs each clipped step.
std::vector<double> curtail_regen(std::span<const double> demand, const SystemModel& model, const HorizonSpec& base,
                                  double margin, std::vector<Curtailment>* log);

/// Best k-stack collective plan (others off) mapped onto the individual
/// layout of `built`. Empty when no group could be solved.
WarmStart group_hint(const BuiltProblem& built, const SystemModel& model, const SolverOptions& opts,
                     double time_limit);

struct WindowSolve {
  BuiltProblem built;
  MiqpSolution solution;
  bool recovered = false;  // solved only after widening the terminal window
};

/// Builds and solves one window with the configured hints; on infeasibility
/// retries once with the terminal window doubled. Throws SolveFailure when
/// no schedule comes out.
WindowSolve solve_window(std::span<const double> demand, const HorizonSpec& h, const SystemModel& model,
                         const MpcConfig& cfg, const SolverOptions& opts, const WarmStart& previous);

struct OptimizeResult {
  WindowSolve window;
  Schedule schedule;
  SimulationTrace trace;  // schedule replayed on the truth models
  CostBreakdown cost;     // truth accounting
  CostBreakdown surrogate;
  std::vector<Curtailment> curtailments;
};

/// One solve over the first horizon_s of the profile.
OptimizeResult optimize_once(const PowerProfile& profile, const SystemModel& model, const HorizonSpec& base,
                             const MpcConfig& cfg, StackControl mode, const SolverOptions& opts);

/// Block receding-horizon loop on the truth models.
MpcResult run_mpc(const PowerProfile& profile, const SystemModel& model, const HorizonSpec& base,
                  const MpcConfig& cfg, StackControl mode, const SolverOptions& opts);

}  // namespace hems
