#include "hems/problem.hpp"

#include <algorithm>

#include "hems/error.hpp"

namespace hems {

int MiqpProblem::add_var(std::string name, double lo, double hi, bool integer, double q, double c) {
  if (lo > hi) throw InfeasibleError("variable " + name + " has empty bounds");
  q_.push_back(q);
  c_.push_back(c);
  var_lo_.push_back(lo);
  var_hi_.push_back(hi);
  integer_.push_back(integer ? 1 : 0);
  var_name_.push_back(std::move(name));
  return num_vars() - 1;
}

int MiqpProblem::add_row(std::string name, std::string tag, double lo, double hi,
                         std::initializer_list<Entry> entries) {
  return add_row(std::move(name), std::move(tag), lo, hi, std::span<const Entry>(entries.begin(), entries.size()));
}

int MiqpProblem::add_row(std::string name, std::string tag, double lo, double hi, std::span<const Entry> entries) {
  if (lo > hi) throw InfeasibleError("row " + name + " has empty bounds");
  for (const auto& e : entries) {
    if (e.col < 0 || e.col >= num_vars()) throw ValidationError("row " + name + " references an unknown column");
    if (e.value == 0.0) continue;
    cols_.push_back(e.col);
    coefs_.push_back(e.value);
  }
  row_start_.push_back(static_cast<int>(cols_.size()));
  row_lo_.push_back(lo);
  row_hi_.push_back(hi);
  row_name_.push_back(std::move(name));
  row_tag_.push_back(std::move(tag));
  return num_rows() - 1;
}

int MiqpProblem::num_integers() const {
  return static_cast<int>(std::count(integer_.begin(), integer_.end(), 1));
}

double MiqpProblem::objective(std::span<const double> x) const {
  double f = constant_;
  for (int j = 0; j < num_vars(); ++j) f += 0.5 * q_[j] * x[j] * x[j] + c_[j] * x[j];
  return f;
}

double MiqpProblem::row_activity(int r, std::span<const double> x) const {
  double a = 0.0;
  for (int k = row_start_[r]; k < row_start_[r + 1]; ++k) a += coefs_[k] * x[cols_[k]];
  return a;
}

int MiqpProblem::worst_row(std::span<const double> x, double* violation) const {
  int worst = -1;
  double best = 0.0;
  for (int r = 0; r < num_rows(); ++r) {
    const double a = row_activity(r, x);
    const double v = std::max(row_lo_[r] - a, a - row_hi_[r]);
    if (v > best) {
      best = v;
      worst = r;
    }
  }
  if (violation) *violation = best;
  return worst;
}

double MiqpProblem::max_violation(std::span<const double> x) const {
  double v = 0.0;
  worst_row(x, &v);
  for (int j = 0; j < num_vars(); ++j) v = std::max({v, var_lo_[j] - x[j], x[j] - var_hi_[j]});
  return v;
}

}  // namespace hems
