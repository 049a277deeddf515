#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hems/problem.hpp"

namespace hems {

enum class QpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kNumericalFailure };

std::string to_string(QpStatus s);

struct QpOptions {
  double tol = 1e-9;          // relative KKT tolerance
  int max_iter = 150;
  double penalty = 1e6;       // elastic price on row violation
  double feas_tol = 1e-7;     // absolute row violation accepted as feasible
  bool polish = true;         // active-set cleanup of the final iterate
};

struct QpSolution {
  QpStatus status = QpStatus::kNumericalFailure;
  std::vector<double> x;
  std::vector<double> row_duals;  // y in  c + Qx = A'y + bound duals
  double objective = kInf;        // original objective at x
  double lower_bound = -kInf;     // valid bound on the optimum (optimal status only)
  double violation = 0.0;         // max row/bound violation at x
  double phase1_value = 0.0;      // minimum total violation when infeasible
  int iterations = 0;
  double primal_residual = 0.0, dual_residual = 0.0, complementarity = 0.0;
};

/// Primal-dual interior point method for the continuous relaxation of a
/// MiqpProblem. Every row gets a priced elastic slack pair, which keeps the
/// reduced KKT matrix quasi-definite and lets infeasible nodes terminate; a
/// positive violation at the end is confirmed by a phase-1 solve.
///
/// The sparsity pattern is analysed once per solver, so repeated solves that
/// only change variable bounds (branch-and-bound nodes) reuse it. Fixed
/// variables (lo == hi) are eliminated numerically without changing the
/// pattern. Not thread safe; use one solver per thread.
class QpSolver {
 public:
  explicit QpSolver(const MiqpProblem& problem);
  ~QpSolver();
  QpSolver(QpSolver&&) noexcept;
  QpSolver& operator=(QpSolver&&) noexcept;

  /// Solves with the given variable bounds in place of the problem's own.
  QpSolution solve(std::span<const double> var_lo, std::span<const double> var_hi, const QpOptions& opts = {});
  QpSolution solve(const QpOptions& opts = {});

  const MiqpProblem& problem() const { return *problem_; }

 private:
  struct Impl;
  const MiqpProblem* problem_;
  std::unique_ptr<Impl> impl_;
};

/// One-off relaxation solve with the problem's own bounds.
QpSolution solve_qp(const MiqpProblem& problem, const QpOptions& opts = {});

}  // namespace hems
