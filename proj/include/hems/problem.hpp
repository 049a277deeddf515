#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hems {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min 0.5 x'diag(q)x + c'x + constant
/// s.t. row_lo <= A x <= row_hi, var_lo <= x <= var_hi, some x binary.
/// A is stored row-wise (CSR) and rows are appended in order.
class MiqpProblem {
 public:
  struct Entry {
    int col;
    double value;
  };

  int add_var(std::string name, double lo, double hi, bool integer, double q = 0.0, double c = 0.0);
  int add_row(std::string name, std::string tag, double lo, double hi, std::initializer_list<Entry> entries);
  int add_row(std::string name, std::string tag, double lo, double hi, std::span<const Entry> entries);

  int num_vars() const { return static_cast<int>(q_.size()); }
  int num_rows() const { return static_cast<int>(row_lo_.size()); }
  int num_integers() const;
  int num_nonzeros() const { return static_cast<int>(cols_.size()); }
  bool empty() const { return q_.empty(); }

  // Row access.
  int row_begin(int r) const { return row_start_[r]; }
  int row_end(int r) const { return row_start_[r + 1]; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<double>& coefs() const { return coefs_; }
  double row_lo(int r) const { return row_lo_[r]; }
  double row_hi(int r) const { return row_hi_[r]; }
  const std::string& row_name(int r) const { return row_name_[r]; }
  const std::string& row_tag(int r) const { return row_tag_[r]; }

  // Column access.
  double q(int j) const { return q_[j]; }
  double c(int j) const { return c_[j]; }
  double var_lo(int j) const { return var_lo_[j]; }
  double var_hi(int j) const { return var_hi_[j]; }
  bool is_integer(int j) const { return integer_[j] != 0; }
  const std::string& var_name(int j) const { return var_name_[j]; }
  double constant() const { return constant_; }

  const std::vector<double>& q() const { return q_; }
  const std::vector<double>& c() const { return c_; }
  const std::vector<double>& var_lo() const { return var_lo_; }
  const std::vector<double>& var_hi() const { return var_hi_; }

  // Mutators for callers that adjust a built problem (tests, presolve).
  void set_q(int j, double v) { q_[j] = v; }
  void set_c(int j, double v) { c_[j] = v; }
  void set_var_bounds(int j, double lo, double hi) {
    var_lo_[j] = lo;
    var_hi_[j] = hi;
  }
  void set_row_bounds(int r, double lo, double hi) {
    row_lo_[r] = lo;
    row_hi_[r] = hi;
  }
  void add_constant(double v) { constant_ += v; }

  double objective(std::span<const double> x) const;
  double row_activity(int r, std::span<const double> x) const;
  /// Largest violation over rows and variable bounds.
  double max_violation(std::span<const double> x) const;
  /// Row with the largest violation, -1 when all rows hold.
  int worst_row(std::span<const double> x, double* violation = nullptr) const;

 private:
  std::vector<double> q_, c_, var_lo_, var_hi_;
  std::vector<char> integer_;
  std::vector<std::string> var_name_;
  std::vector<int> row_start_{0};
  std::vector<int> cols_;
  std::vector<double> coefs_;
  std::vector<double> row_lo_, row_hi_;
  std::vector<std::string> row_name_, row_tag_;
  double constant_ = 0.0;
};

}  // namespace hems
