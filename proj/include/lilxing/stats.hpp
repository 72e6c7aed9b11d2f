#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lilxing {

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  Eigen::VectorXd residuals;
};

/// Ordinary least squares of y on [1, x], solved through a QR of the design.
LinearFit ols(const Eigen::Ref<const Eigen::VectorXd>& x,
              const Eigen::Ref<const Eigen::VectorXd>& y);

/// Standard error of the OLS slope when point i has known variance var[i]:
/// sqrt(sum (x_i - xbar)^2 var_i) / Sxx.
double ols_slope_stderr(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& var);

struct KsReport {
  double statistic = 0;
  double threshold = 0;  // critical value at the requested level
  double p_value = 1;
  bool passed = true;    // statistic <= threshold
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov
/// distribution (Stephens' small-sample adjustment for the p-value).
KsReport ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 0.01);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

}  // namespace lilxing
