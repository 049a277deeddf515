#include "hems/fit.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hems/error.hpp"

namespace hems {

double r_squared(const std::vector<double>& y, const std::vector<double>& fitted) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    sse += (y[k] - fitted[k]) * (y[k] - fitted[k]);
    sst += (y[k] - mean) * (y[k] - mean);
  }
  if (sst == 0.0) return sse == 0.0 ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

LinearFit least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
  const auto rows = static_cast<Eigen::Index>(y.size());
  const auto cols = static_cast<Eigen::Index>(columns.size());
  if (cols == 0 || rows < cols) throw FitError("not enough samples for the requested fit");
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (static_cast<Eigen::Index>(columns[c].size()) != rows) throw FitError("regressor length mismatch");
    for (Eigen::Index r = 0; r < rows; ++r) x(r, c) = columns[c][r];
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);

  // Column scaling keeps the rank test meaningful when regressors differ by
  // orders of magnitude (kW squared next to a constant column).
  Eigen::VectorXd scale(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double n = x.col(c).norm();
    if (n == 0.0) throw FitError("regressor column is identically zero");
    scale(c) = n;
    x.col(c) /= n;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) throw FitError("rank-deficient samples");
  Eigen::VectorXd sol = qr.solve(rhs);

  LinearFit fit;
  fit.coeffs.resize(static_cast<std::size_t>(cols));
  for (Eigen::Index c = 0; c < cols; ++c) fit.coeffs[static_cast<std::size_t>(c)] = sol(c) / scale(c);
  std::vector<double> fitted(y.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    double v = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) v += columns[c][r] * fit.coeffs[static_cast<std::size_t>(c)];
    fitted[static_cast<std::size_t>(r)] = v;
    fit.max_abs_error = std::max(fit.max_abs_error, std::abs(v - y[static_cast<std::size_t>(r)]));
  }
  fit.r_squared = r_squared(y, fitted);
  return fit;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw FitError("a line needs at least two samples");
  return least_squares({x, std::vector<double>(x.size(), 1.0)}, y);
}

}  // namespace hems
