#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hems {

/// Piecewise-linear map y(x) over a closed domain [x.front(), x.back()].
///
/// Used for the battery OCV(SOC) and R0(SOC) tables and the degradation
/// pre-exponent M(C-rate). Knots must be strictly increasing.
class PiecewiseLinear {
 public:
  enum class OutOfRange { kThrow, kClamp };

  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> xs, std::vector<double> ys,
                  OutOfRange policy = OutOfRange::kThrow);

  double operator()(double x) const;

  double x_min() const { return xs_.front(); }
  double x_max() const { return xs_.back(); }
  bool contains(double x) const { return x >= xs_.front() && x <= xs_.back(); }
  bool empty() const { return xs_.empty(); }

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  OutOfRange policy() const { return policy_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  OutOfRange policy_ = OutOfRange::kThrow;
};

/// Reads a two-column CSV table (`x,y` header line) into a curve.
PiecewiseLinear load_curve_csv(const std::filesystem::path& path,
                               PiecewiseLinear::OutOfRange policy = PiecewiseLinear::OutOfRange::kThrow);

}  // namespace hems
