#include "hems/curve.hpp"

#include <algorithm>
#include <cmath>

#include "hems/csv.hpp"
#include "hems/error.hpp"

namespace hems {

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys, OutOfRange policy)
    : xs_(std::move(xs)), ys_(std::move(ys)), policy_(policy) {
  if (xs_.empty() || xs_.size() != ys_.size()) {
    throw ValidationError("curve needs matching, non-empty knot and value lists");
  }
  for (std::size_t k = 0; k < xs_.size(); ++k) {
    if (!std::isfinite(xs_[k]) || !std::isfinite(ys_[k])) throw ValidationError("curve knots must be finite");
    if (k > 0 && !(xs_[k] > xs_[k - 1])) throw ValidationError("curve knots must be strictly increasing");
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (xs_.empty()) throw DomainError("evaluating an empty curve");
  if (x < xs_.front() || x > xs_.back()) {
    if (policy_ == OutOfRange::kThrow) {
      throw DomainError("curve argument " + std::to_string(x) + " outside [" + std::to_string(xs_.front()) +
                        ", " + std::to_string(xs_.back()) + "]");
    }
    return x < xs_.front() ? ys_.front() : ys_.back();
  }
  if (xs_.size() == 1) return ys_.front();
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
  if (hi >= xs_.size()) hi = xs_.size() - 1;
  const std::size_t lo = hi - 1;
  const double w = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
  return ys_[lo] + w * (ys_[hi] - ys_[lo]);
}

PiecewiseLinear load_curve_csv(const std::filesystem::path& path, PiecewiseLinear::OutOfRange policy) {
  const auto table = csv::read_numeric(path, 2, 2);
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    xs.push_back(row[0]);
    ys.push_back(row[1]);
  }
  if (xs.empty()) throw ValidationError(path.string() + ": no samples");
  return PiecewiseLinear(std::move(xs), std::move(ys), policy);
}

}  // namespace hems
