#pragma once

#include <vector>

namespace hems {

struct LinearFit {
  std::vector<double> coeffs;
  double r_squared = 0.0;
  double max_abs_error = 0.0;
};

/// Least squares for y ~ X c, where `columns` holds the regressors column by
/// column. R² is taken about the mean of y. Throws FitError when the design
/// is rank deficient.
LinearFit least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y);

/// y = slope * x + intercept through the given points; coeffs = {slope, intercept}.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Coefficient of determination, 1 - SSE/SST with SST about the mean.
double r_squared(const std::vector<double>& y, const std::vector<double>& fitted);

}  // namespace hems
