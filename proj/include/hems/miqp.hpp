#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hems/problem.hpp"
#include "hems/qp.hpp"

namespace hems {

enum class MiqpStatus { kOptimal, kGapLimit, kTimeLimit, kNodeLimit, kInfeasible, kUnbounded };
enum class Branching { kMostFractional, kPseudoCost };
enum class NodeSelection { kBestBound, kDepthFirst };

std::string to_string(MiqpStatus s);

struct SolverOptions {
  double abs_gap_tol = 1e-4;  // $
  double rel_gap_tol = 1e-6;
  double time_limit = std::numeric_limits<double>::infinity();  // s
  long node_limit = std::numeric_limits<long>::max();
  double integrality_tol = 1e-6;
  double kkt_tol = 1e-9;
  Branching branching = Branching::kMostFractional;
  NodeSelection node_selection = NodeSelection::kBestBound;
  int threads = 1;  // node evaluation is sequential; values above 1 are accepted and ignored
  bool heuristics = true;
  double dive_fix_fraction = 0.5;  // share of fractional binaries rounded per diving round
  std::ostream* log = nullptr;     // incumbent log, one `time,nodes,incumbent,bound,gap` line each

  void validate() const;
};

struct MiqpSolution {
  MiqpStatus status = MiqpStatus::kInfeasible;
  double objective = std::numeric_limits<double>::infinity();
  double best_bound = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  std::vector<double> values;
  long nodes_explored = 0;
  long qp_solves = 0;
  int node_failures = 0;
  double root_bound = -std::numeric_limits<double>::infinity();
  double wall_time = 0.0;
  std::string incumbent_source;  // heuristic or tree stage that produced the incumbent
  std::vector<double> bound_history;      // best bound after each processed node
  std::vector<double> incumbent_history;  // incumbent objective at each improvement

  bool has_incumbent() const { return !values.empty(); }
};

/// Binary values (and, as a starting guess, continuous ones) for seeding the
/// incumbent. Empty means no hint.
struct WarmStart {
  std::vector<double> values;
  bool empty() const { return values.empty(); }
};

/// Branch-and-bound over interior-point QP relaxations.
MiqpSolution solve(const MiqpProblem& problem, const SolverOptions& opts = {}, const WarmStart* hint = nullptr);
/// Several hints, tried in order; each that completes becomes a candidate incumbent.
MiqpSolution solve(const MiqpProblem& problem, const SolverOptions& opts, std::span<const WarmStart> hints);

/// Shifts a time-major solution (`step_size` columns per step) forward by
/// `shift` steps and pads the tail with the last step. `target_steps` < 0
/// keeps the previous length. shift >= previous length yields an empty hint.
WarmStart warm_start_from(std::span<const double> previous, int step_size, int shift, int target_steps = -1);

/// Activity-based bound tightening with an undo trail.
class BoundPropagator {
 public:
  explicit BoundPropagator(const MiqpProblem& problem);

  void reset(std::span<const double> lo, std::span<const double> hi);
  /// Propagates every row; false on a proven conflict.
  bool propagate_all();
  /// Fixes column j to v and propagates; false on conflict (state is left as is).
  bool fix(int j, double v);
  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t mark);

  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

 private:
  bool set_bounds(int j, double lo, double hi);
  bool propagate_queue();
  bool propagate_row(int r);

  const MiqpProblem& p_;
  std::vector<int> col_start_, col_rows_;
  std::vector<double> lo_, hi_;
  std::vector<std::tuple<int, double, double>> trail_;
  std::vector<int> queue_;
  std::vector<char> queued_;
  long work_ = 0;
};

}  // namespace hems
