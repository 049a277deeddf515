#include "hems/miqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <optional>
#include <queue>

#include "hems/error.hpp"

namespace hems {

std::string to_string(MiqpStatus s) {
  switch (s) {
    case MiqpStatus::kOptimal: return "optimal";
    case MiqpStatus::kGapLimit: return "gap-limit";
    case MiqpStatus::kTimeLimit: return "time-limit";
    case MiqpStatus::kNodeLimit: return "node-limit";
    case MiqpStatus::kInfeasible: return "infeasible";
    case MiqpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

void SolverOptions::validate() const {
  if (!(abs_gap_tol > 0.0) || !(rel_gap_tol > 0.0) || !(integrality_tol > 0.0) || !(kkt_tol > 0.0)) {
    throw ValidationError("solver tolerances must be positive");
  }
  if (!(time_limit > 0.0)) throw ValidationError("solver time limit must be positive");
  if (node_limit < 1) throw ValidationError("solver node limit must be at least 1");
  if (threads < 1) throw ValidationError("solver thread count must be at least 1");
  if (!(dive_fix_fraction > 0.0 && dive_fix_fraction <= 1.0)) {
    throw ValidationError("dive fix fraction must lie in (0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Bound propagation

namespace {
constexpr double kPropTol = 1e-9;
}

BoundPropagator::BoundPropagator(const MiqpProblem& problem) : p_(problem) {
  const int n = p_.num_vars(), m = p_.num_rows();
  col_start_.assign(static_cast<std::size_t>(n + 1), 0);
  for (int k = 0; k < p_.num_nonzeros(); ++k) ++col_start_[p_.cols()[k] + 1];
  for (int j = 0; j < n; ++j) col_start_[j + 1] += col_start_[j];
  col_rows_.resize(static_cast<std::size_t>(p_.num_nonzeros()));
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int r = 0; r < m; ++r) {
    for (int k = p_.row_begin(r); k < p_.row_end(r); ++k) col_rows_[fill[p_.cols()[k]]++] = r;
  }
  queued_.assign(static_cast<std::size_t>(m), 0);
  lo_ = p_.var_lo();
  hi_ = p_.var_hi();
}

void BoundPropagator::reset(std::span<const double> lo, std::span<const double> hi) {
  lo_.assign(lo.begin(), lo.end());
  hi_.assign(hi.begin(), hi.end());
  trail_.clear();
  for (int r : queue_) queued_[r] = 0;
  queue_.clear();
}

void BoundPropagator::undo(std::size_t mark) {
  while (trail_.size() > mark) {
    auto [j, l, h] = trail_.back();
    trail_.pop_back();
    lo_[j] = l;
    hi_[j] = h;
  }
  for (int r : queue_) queued_[r] = 0;
  queue_.clear();
}

bool BoundPropagator::set_bounds(int j, double lo, double hi) {
  if (lo > hi) {
    if (lo > hi + 1e-7 * std::max(1.0, std::abs(hi))) return false;
    lo = hi = 0.5 * (lo + hi);
  }
  if (lo == lo_[j] && hi == hi_[j]) return true;
  trail_.emplace_back(j, lo_[j], hi_[j]);
  lo_[j] = lo;
  hi_[j] = hi;
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
    const int r = col_rows_[k];
    if (!queued_[r]) {
      queued_[r] = 1;
      queue_.push_back(r);
    }
  }
  return true;
}

bool BoundPropagator::fix(int j, double v) {
  if (v < lo_[j] - kPropTol || v > hi_[j] + kPropTol) return false;
  if (!set_bounds(j, v, v)) return false;
  return propagate_queue();
}

bool BoundPropagator::propagate_all() {
  for (int r = 0; r < p_.num_rows(); ++r) {
    if (!queued_[r]) {
      queued_[r] = 1;
      queue_.push_back(r);
    }
  }
  return propagate_queue();
}

bool BoundPropagator::propagate_queue() {
  work_ = 0;
  const long limit = 40L * (p_.num_rows() + 10);
  std::size_t head = 0;
  bool ok = true;
  while (head < queue_.size()) {
    const int r = queue_[head++];
    queued_[r] = 0;
    if (!propagate_row(r)) {
      ok = false;
      break;
    }
    if (++work_ > limit) break;
    if (head > 4096 && head * 2 > queue_.size()) {
      queue_.erase(queue_.begin(), queue_.begin() + static_cast<long>(head));
      head = 0;
    }
  }
  for (std::size_t k = head; k < queue_.size(); ++k) queued_[queue_[k]] = 0;
  queue_.clear();
  return ok;
}

bool BoundPropagator::propagate_row(int r) {
  const double rlo = p_.row_lo(r), rhi = p_.row_hi(r);
  double min_act = 0.0, max_act = 0.0;
  int min_inf = 0, max_inf = 0;
  const int b = p_.row_begin(r), e = p_.row_end(r);
  for (int k = b; k < e; ++k) {
    const double a = p_.coefs()[k];
    const int j = p_.cols()[k];
    const double l = lo_[j], h = hi_[j];
    if (a > 0) {
      if (std::isinf(l)) ++min_inf; else min_act += a * l;
      if (std::isinf(h)) ++max_inf; else max_act += a * h;
    } else {
      if (std::isinf(h)) ++min_inf; else min_act += a * h;
      if (std::isinf(l)) ++max_inf; else max_act += a * l;
    }
  }
  const double tol = 1e-7 * std::max({1.0, std::abs(rlo) < kInf ? std::abs(rlo) : 0.0,
                                      std::abs(rhi) < kInf ? std::abs(rhi) : 0.0});
  if (min_inf == 0 && min_act > rhi + tol) return false;
  if (max_inf == 0 && max_act < rlo - tol) return false;

  for (int k = b; k < e; ++k) {
    const double a = p_.coefs()[k];
    const int j = p_.cols()[k];
    const double l = lo_[j], h = hi_[j];
    double new_lo = l, new_hi = h;
    // Upper row bound against the minimum activity of the other columns.
    if (rhi < kInf) {
      const double own = a > 0 ? l : h;
      const int inf_rest = min_inf - (std::isinf(own) ? 1 : 0);
      if (inf_rest == 0) {
        const double rest = min_act - (std::isinf(own) ? 0.0 : a * own);
        const double v = (rhi - rest) / a;
        if (a > 0) new_hi = std::min(new_hi, v); else new_lo = std::max(new_lo, v);
      }
    }
    if (rlo > -kInf) {
      const double own = a > 0 ? h : l;
      const int inf_rest = max_inf - (std::isinf(own) ? 1 : 0);
      if (inf_rest == 0) {
        const double rest = max_act - (std::isinf(own) ? 0.0 : a * own);
        const double v = (rlo - rest) / a;
        if (a > 0) new_lo = std::max(new_lo, v); else new_hi = std::min(new_hi, v);
      }
    }
    if (p_.is_integer(j)) {
      new_lo = std::ceil(new_lo - 1e-6);
      new_hi = std::floor(new_hi + 1e-6);
    } else {
      // Ignore negligible continuous tightenings so the queue settles.
      if (std::isfinite(l) && new_lo - l <= 1e-6 * std::max(1.0, std::abs(l))) new_lo = l;
      if (std::isfinite(h) && h - new_hi <= 1e-6 * std::max(1.0, std::abs(h))) new_hi = h;
    }
    if (new_lo > l || new_hi < h) {
      if (!set_bounds(j, std::max(new_lo, l), std::min(new_hi, h))) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Warm start

WarmStart warm_start_from(std::span<const double> previous, int step_size, int shift, int target_steps) {
  if (step_size <= 0 || previous.size() % static_cast<std::size_t>(step_size) != 0) {
    throw ValidationError("warm start: previous solution does not match the step layout");
  }
  if (shift < 0) throw ValidationError("warm start: negative shift");
  const int prev_steps = static_cast<int>(previous.size()) / step_size;
  if (target_steps < 0) target_steps = prev_steps;
  WarmStart ws;
  if (shift >= prev_steps || target_steps == 0) return ws;
  ws.values.resize(static_cast<std::size_t>(target_steps) * step_size);
  for (int t = 0; t < target_steps; ++t) {
    const int src = std::min(t + shift, prev_steps - 1);
    std::copy_n(previous.begin() + static_cast<long>(src) * step_size, step_size,
                ws.values.begin() + static_cast<long>(t) * step_size);
  }
  return ws;
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

using Clock = std::chrono::steady_clock;

struct Node {
  std::vector<std::pair<int, char>> decisions;
  double bound = -kInf;
  long id = 0;
  int branch_var = -1;
  char branch_dir = 0;
  double branch_frac = 0.0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MiqpProblem& p, const SolverOptions& o)
      : p_(p), opts_(o), qp_(p), prop_(p), start_(Clock::now()) {
    for (int j = 0; j < p_.num_vars(); ++j) {
      if (p_.is_integer(j)) binaries_.push_back(j);
    }
    pc_sum_.assign(static_cast<std::size_t>(p_.num_vars()) * 2, 0.0);
    pc_cnt_.assign(static_cast<std::size_t>(p_.num_vars()) * 2, 0);
    qp_opts_.tol = opts_.kkt_tol;
  }

  MiqpSolution run(std::span<const WarmStart> hints);

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  bool out_of_time() const { return elapsed() >= opts_.time_limit; }
  double gap_tol() const {
    return std::max(opts_.abs_gap_tol, opts_.rel_gap_tol * std::abs(incumbent_obj_));
  }
  bool has_incumbent() const { return !incumbent_.empty(); }

  // QP bounds for the current propagator state.
  void qp_bounds() {
    lo_ = p_.var_lo();
    hi_ = p_.var_hi();
    const auto& pl = prop_.lo();
    const auto& ph = prop_.hi();
    for (int j = 0; j < p_.num_vars(); ++j) {
      if (p_.is_integer(j) || ph[j] - pl[j] <= 1e-9) {
        lo_[j] = pl[j];
        hi_[j] = ph[j];
        if (hi_[j] - lo_[j] <= 1e-9) lo_[j] = hi_[j] = 0.5 * (lo_[j] + hi_[j]);
      }
    }
  }

  QpSolution solve_current() {
    qp_bounds();
    ++qp_solves_;
    return qp_.solve(lo_, hi_, qp_opts_);
  }

  bool apply(const std::vector<std::pair<int, char>>& decisions) {
    prop_.reset(root_lo_, root_hi_);
    for (auto [j, v] : decisions) {
      if (!prop_.fix(j, v)) return false;
    }
    return true;
  }

  void fractional(const std::vector<double>& x, std::vector<int>& out) const {
    out.clear();
    for (int j : binaries_) {
      if (prop_.hi()[j] - prop_.lo()[j] < 0.5) continue;
      if (std::abs(x[j] - std::round(x[j])) > opts_.integrality_tol) out.push_back(j);
    }
  }

  // Fixes every binary at its rounded value and re-solves; true if the
  // result became the new incumbent.
  bool try_incumbent(const std::vector<double>& x, const char* source) {
    const auto mark = prop_.mark();
    bool ok = true;
    for (int j : binaries_) {
      const double v = std::clamp(std::round(x[j]), 0.0, 1.0);
      if (prop_.lo()[j] == prop_.hi()[j] && prop_.lo()[j] == v) continue;
      if (!prop_.fix(j, v)) {
        ok = false;
        break;
      }
    }
    bool improved = false;
    if (ok) {
      auto sol = solve_current();
      if (sol.status == QpStatus::kOptimal) improved = offer(sol.x, sol.objective, source);
    }
    prop_.undo(mark);
    return improved;
  }

  bool offer(std::vector<double> x, double obj, const char* source) {
    if (p_.max_violation(x) > 1e-6) return false;
    for (int j : binaries_) {
      if (std::abs(x[j] - std::round(x[j])) > opts_.integrality_tol) return false;
      x[j] = std::round(x[j]);
    }
    obj = p_.objective(x);
    if (has_incumbent() && obj >= incumbent_obj_ - 1e-12) return false;
    incumbent_ = std::move(x);
    incumbent_obj_ = obj;
    source_ = source;
    incumbent_history_.push_back(obj);
    log_line();
    return true;
  }

  void log_line() {
    if (!opts_.log) return;
    const double bound = std::min(global_bound(), incumbent_obj_);
    *opts_.log << elapsed() << ',' << nodes_ << ',' << incumbent_obj_ << ',' << bound << ','
               << incumbent_obj_ - bound << '\n';
  }

  // Any earlier bound stays valid, so the history is kept monotone.
  void record_bound() {
    double b = global_bound();
    if (has_incumbent()) b = std::min(b, incumbent_obj_);
    if (!bound_history_.empty()) b = std::max(b, bound_history_.back());
    bound_history_.push_back(b);
  }

  double global_bound() const {
    double b = kInf;
    if (!open_.empty()) b = std::min(b, open_.top().bound);
    for (const auto& n : stack_) b = std::min(b, n.bound);
    if (have_current_) b = std::min(b, current_bound_);
    b = std::min(b, failed_bound_);
    if (b == kInf) b = has_incumbent() ? incumbent_obj_ : kInf;
    return b;
  }

  // Fractional diving from the current propagator state. Leaves the state unchanged.
  void dive(std::vector<double> x, double fraction, int max_rounds, const char* source) {
    const auto mark = prop_.mark();
    std::vector<int> frac;
    std::vector<int> integral;
    for (int round = 0; round < max_rounds && !out_of_time(); ++round) {
      fractional(x, frac);
      if (frac.empty()) {
        try_incumbent(x, source);
        break;
      }
      integral.clear();
      for (int j : binaries_) {
        if (prop_.hi()[j] - prop_.lo()[j] < 0.5) continue;
        if (std::abs(x[j] - std::round(x[j])) <= opts_.integrality_tol) integral.push_back(j);
      }
      for (int j : integral) {
        if (prop_.hi()[j] - prop_.lo()[j] < 0.5) continue;
        const auto m2 = prop_.mark();
        if (!prop_.fix(j, std::round(x[j]))) prop_.undo(m2);
      }
      std::stable_sort(frac.begin(), frac.end(), [&](int a, int b) {
        return std::abs(x[a] - std::round(x[a])) < std::abs(x[b] - std::round(x[b]));
      });
      const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * frac.size())));
      // On a double conflict keep what is fixed so far and let the next
      // relaxation steer the rest; give up only when nothing moved.
      std::size_t fixed_now = 0;
      bool conflict = false;
      for (std::size_t k = 0; k < frac.size() && k < count; ++k) {
        const int j = frac[k];
        if (prop_.hi()[j] - prop_.lo()[j] < 0.5) continue;
        const double v = std::round(x[j]);
        const auto m2 = prop_.mark();
        if (!prop_.fix(j, v)) {
          prop_.undo(m2);
          if (!prop_.fix(j, 1.0 - v)) {
            prop_.undo(m2);
            conflict = true;
            break;
          }
        }
        ++fixed_now;
      }
      if (conflict && fixed_now == 0) break;
      auto sol = solve_current();
      if (sol.status != QpStatus::kOptimal) break;
      if (has_incumbent() && sol.lower_bound >= incumbent_obj_ - gap_tol()) break;
      x = std::move(sol.x);
    }
    prop_.undo(mark);
  }

  // Relax-and-fix: round binaries in index order, a chunk at a time, with a
  // fresh relaxation after each chunk. For time-major layouts that is a
  // sweep forward in time. A chunk that makes the relaxation infeasible is
  // retried at half the size.
  void relax_and_fix(std::vector<double> x, int chunks, const char* source) {
    const auto mark = prop_.mark();
    std::size_t chunk = std::max<std::size_t>(1, (binaries_.size() + chunks - 1) / chunks);
    std::size_t next = 0;  // position in binaries_
    while (!out_of_time()) {
      while (next < binaries_.size() && prop_.hi()[binaries_[next]] - prop_.lo()[binaries_[next]] < 0.5) ++next;
      if (next == binaries_.size()) {
        try_incumbent(x, source);
        break;
      }
      const auto round_mark = prop_.mark();
      std::size_t k = next, taken = 0;
      bool conflict = false;
      for (; k < binaries_.size() && taken < chunk; ++k) {
        const int j = binaries_[k];
        if (prop_.hi()[j] - prop_.lo()[j] < 0.5) continue;
        const double v = std::clamp(std::round(x[j]), 0.0, 1.0);
        const auto m2 = prop_.mark();
        if (!prop_.fix(j, v)) {
          prop_.undo(m2);
          if (!prop_.fix(j, 1.0 - v)) {
            prop_.undo(m2);
            conflict = true;
            break;
          }
        }
        ++taken;
      }
      QpSolution sol;
      if (!conflict) sol = solve_current();
      if (conflict || sol.status != QpStatus::kOptimal ||
          (has_incumbent() && sol.lower_bound >= incumbent_obj_ - gap_tol())) {
        prop_.undo(round_mark);
        if (conflict || sol.status != QpStatus::kOptimal) {
          if (chunk == 1) break;
          chunk = std::max<std::size_t>(1, chunk / 2);
          continue;
        }
        break;
      }
      x = std::move(sol.x);
      next = k;
    }
    prop_.undo(mark);
  }

  // Hint: fix binaries in index order following the hint, flipping on conflict.
  void use_hint(const WarmStart& hint) {
    if (hint.values.size() != static_cast<std::size_t>(p_.num_vars())) return;
    const auto mark = prop_.mark();
    bool ok = true;
    for (int j : binaries_) {
      if (prop_.hi()[j] - prop_.lo()[j] < 0.5) continue;
      const double v = std::clamp(std::round(hint.values[j]), 0.0, 1.0);
      const auto m2 = prop_.mark();
      if (prop_.fix(j, v)) continue;
      prop_.undo(m2);
      if (prop_.fix(j, 1.0 - v)) continue;
      ok = false;
      break;
    }
    if (ok) {
      auto sol = solve_current();
      if (sol.status == QpStatus::kOptimal) offer(sol.x, sol.objective, "hint");
    }
    prop_.undo(mark);
  }

  int choose_branch(const std::vector<double>& x, const std::vector<int>& frac) const {
    int best = -1;
    double best_score = -1.0;
    double avg_dn = 0.0, avg_up = 0.0;
    long n_dn = 0, n_up = 0;
    if (opts_.branching == Branching::kPseudoCost) {
      for (int j : binaries_) {
        if (pc_cnt_[2 * j]) avg_dn += pc_sum_[2 * j] / pc_cnt_[2 * j], ++n_dn;
        if (pc_cnt_[2 * j + 1]) avg_up += pc_sum_[2 * j + 1] / pc_cnt_[2 * j + 1], ++n_up;
      }
      avg_dn = n_dn ? avg_dn / n_dn : 1.0;
      avg_up = n_up ? avg_up / n_up : 1.0;
    }
    for (int j : frac) {
      const double f = x[j] - std::floor(x[j]);
      double score;
      if (opts_.branching == Branching::kPseudoCost) {
        const double dn = pc_cnt_[2 * j] ? pc_sum_[2 * j] / pc_cnt_[2 * j] : avg_dn;
        const double up = pc_cnt_[2 * j + 1] ? pc_sum_[2 * j + 1] / pc_cnt_[2 * j + 1] : avg_up;
        score = std::max(f * dn, 1e-9) * std::max((1.0 - f) * up, 1e-9);
      } else {
        score = 0.5 - std::abs(f - 0.5);
      }
      if (score > best_score + 1e-12) {  // ties keep the lowest index
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  void record_pseudocost(const Node& node, double child_bound, double parent_bound) {
    if (node.branch_var < 0 || !(child_bound < kInf) || !(parent_bound > -kInf)) return;
    const double dist = node.branch_dir == 0 ? node.branch_frac : 1.0 - node.branch_frac;
    if (dist <= 1e-9) return;
    const auto idx = static_cast<std::size_t>(2 * node.branch_var + node.branch_dir);
    pc_sum_[idx] += std::max(0.0, child_bound - parent_bound) / dist;
    ++pc_cnt_[idx];
  }

  const MiqpProblem& p_;
  SolverOptions opts_;
  QpOptions qp_opts_;
  QpSolver qp_;
  BoundPropagator prop_;
  Clock::time_point start_;
  std::vector<int> binaries_;
  std::vector<double> root_lo_, root_hi_, lo_, hi_;
  std::vector<double> incumbent_;
  double incumbent_obj_ = kInf;
  std::string source_;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  std::vector<Node> stack_;
  double current_bound_ = -kInf;
  bool have_current_ = false;
  double failed_bound_ = kInf;
  long nodes_ = 0;
  long qp_solves_ = 0;
  long next_id_ = 0;
  int failures_ = 0;
  std::vector<double> pc_sum_;
  std::vector<long> pc_cnt_;
  std::vector<double> bound_history_, incumbent_history_;
};

MiqpSolution BranchAndBound::run(std::span<const WarmStart> hints) {
  MiqpSolution out;
  auto finish = [&](MiqpStatus st) {
    out.status = st;
    out.values = incumbent_;
    out.objective = incumbent_obj_;
    out.nodes_explored = nodes_;
    out.qp_solves = qp_solves_;
    out.node_failures = failures_;
    out.wall_time = elapsed();
    out.incumbent_source = source_;
    out.bound_history = bound_history_;
    out.incumbent_history = incumbent_history_;
    return out;
  };

  prop_.reset(p_.var_lo(), p_.var_hi());
  if (!prop_.propagate_all()) return finish(MiqpStatus::kInfeasible);
  root_lo_ = prop_.lo();
  root_hi_ = prop_.hi();

  auto root = solve_current();
  out.root_bound = root.lower_bound;
  if (root.status == QpStatus::kUnbounded) return finish(MiqpStatus::kUnbounded);
  if (root.status == QpStatus::kInfeasible) {
    out.best_bound = kInf;
    return finish(MiqpStatus::kInfeasible);
  }
  const bool root_ok = root.status == QpStatus::kOptimal;
  if (!root_ok) ++failures_;

  have_current_ = true;
  current_bound_ = root_ok ? root.lower_bound : -kInf;
  for (const auto& h : hints) {
    if (!h.empty() && !out_of_time()) use_hint(h);
  }
  if (opts_.heuristics && root_ok) {
    dive(root.x, 1.0, 2, "rounding");
    if (!out_of_time()) dive(root.x, opts_.dive_fix_fraction, 60, "diving");
    if (!has_incumbent() && !out_of_time()) relax_and_fix(root.x, 10, "relax-and-fix");
  }
  have_current_ = false;

  Node first;
  first.bound = root_ok ? root.lower_bound : -kInf;
  first.id = next_id_++;
  std::optional<Node> current = std::move(first);
  std::optional<QpSolution> current_sol;
  if (root_ok) current_sol = std::move(root);

  std::vector<int> frac;
  MiqpStatus limit_status = MiqpStatus::kOptimal;
  bool limited = false;
  while (true) {
    if (out_of_time()) {
      limit_status = MiqpStatus::kTimeLimit;
      limited = true;
      break;
    }
    if (nodes_ >= opts_.node_limit) {
      limit_status = MiqpStatus::kNodeLimit;
      limited = true;
      break;
    }
    if (!current) {
      // Next open node.
      if (opts_.node_selection == NodeSelection::kDepthFirst) {
        if (stack_.empty()) break;
        current = std::move(stack_.back());
        stack_.pop_back();
      } else {
        if (open_.empty()) break;
        current = open_.top();
        open_.pop();
      }
      current_sol.reset();
      if (has_incumbent() && current->bound >= incumbent_obj_ - gap_tol()) {
        current.reset();
        continue;
      }
    }
    if (has_incumbent() && std::min(global_bound(), current->bound) >= incumbent_obj_ - gap_tol()) break;

    Node node = std::move(*current);
    current.reset();
    have_current_ = true;
    current_bound_ = node.bound;
    ++nodes_;

    QpSolution sol;
    if (current_sol) {
      sol = std::move(*current_sol);
      current_sol.reset();
      if (!apply(node.decisions)) {
        have_current_ = false;
        continue;
      }
    } else {
      if (!apply(node.decisions)) {
        have_current_ = false;
        record_bound();
        continue;
      }
      sol = solve_current();
    }
    if (sol.status == QpStatus::kInfeasible) {
      have_current_ = false;
      record_pseudocost(node, kInf, node.bound);
      record_bound();
      continue;
    }
    if (sol.status != QpStatus::kOptimal) {
      ++failures_;
      failed_bound_ = std::min(failed_bound_, node.bound);
      have_current_ = false;
      record_bound();
      continue;
    }
    const double parent_bound = node.bound;
    const double bound = std::max(node.bound, sol.lower_bound);
    record_pseudocost(node, bound, parent_bound);
    node.bound = bound;
    current_bound_ = bound;
    if (has_incumbent() && bound >= incumbent_obj_ - gap_tol()) {
      have_current_ = false;
      record_bound();
      continue;
    }
    fractional(sol.x, frac);
    if (frac.empty()) {
      try_incumbent(sol.x, "tree");
      have_current_ = false;
      record_bound();
      continue;
    }
    if (opts_.heuristics && nodes_ % 50 == 0) dive(sol.x, 1.0, 2, "rounding");
    if (opts_.heuristics && nodes_ % 200 == 0) dive(sol.x, opts_.dive_fix_fraction, 30, "diving");

    const int j = choose_branch(sol.x, frac);
    const double f = sol.x[j] - std::floor(sol.x[j]);
    Node down, up;
    for (Node* child : {&down, &up}) {
      child->decisions = node.decisions;
      child->bound = bound;
      child->id = next_id_++;
      child->branch_var = j;
      child->branch_frac = f;
    }
    down.decisions.emplace_back(j, 0);
    down.branch_dir = 0;
    up.decisions.emplace_back(j, 1);
    up.branch_dir = 1;
    have_current_ = false;
    if (opts_.node_selection == NodeSelection::kDepthFirst) {
      // Explore the rounding direction first.
      if (f >= 0.5) {
        stack_.push_back(std::move(down));
        stack_.push_back(std::move(up));
      } else {
        stack_.push_back(std::move(up));
        stack_.push_back(std::move(down));
      }
    } else {
      // Dive into the rounding direction, park the sibling.
      if (f >= 0.5) {
        open_.push(std::move(down));
        current = std::move(up);
      } else {
        open_.push(std::move(up));
        current = std::move(down);
      }
    }
    record_bound();
  }

  have_current_ = false;
  if (current) {
    open_.push(std::move(*current));
    current.reset();
  }
  double bound = global_bound();
  if (!bound_history_.empty() && bound < kInf) bound = std::max(bound, bound_history_.back());
  if (!has_incumbent()) {
    out.best_bound = limited ? bound : kInf;
    return finish(limited ? limit_status : MiqpStatus::kInfeasible);
  }
  bound = std::min(bound, incumbent_obj_);
  out.best_bound = bound;
  out.gap = incumbent_obj_ - bound;
  MiqpStatus st;
  if (out.gap <= opts_.abs_gap_tol) {
    st = MiqpStatus::kOptimal;
  } else if (out.gap <= gap_tol()) {
    st = MiqpStatus::kGapLimit;
  } else {
    st = limited ? limit_status : MiqpStatus::kGapLimit;
  }
  auto res = finish(st);
  res.best_bound = bound;
  res.gap = out.gap;
  res.root_bound = out.root_bound;
  return res;
}

}  // namespace

MiqpSolution solve(const MiqpProblem& problem, const SolverOptions& opts, const WarmStart* hint) {
  if (hint == nullptr) return solve(problem, opts, std::span<const WarmStart>{});
  return solve(problem, opts, std::span<const WarmStart>(hint, 1));
}

MiqpSolution solve(const MiqpProblem& problem, const SolverOptions& opts, std::span<const WarmStart> hints) {
  opts.validate();
  if (problem.empty()) throw ValidationError("cannot solve an empty problem");
  for (int j = 0; j < problem.num_vars(); ++j) {
    if (problem.q(j) < 0.0) throw ValidationError("non-convex objective: column " + problem.var_name(j));
    if (problem.is_integer(j) && (problem.var_lo(j) < 0.0 || problem.var_hi(j) > 1.0)) {
      throw ValidationError("integer column " + problem.var_name(j) + " is not binary");
    }
  }
  BranchAndBound bb(problem, opts);
  return bb.run(hints);
}

}  // namespace hems
