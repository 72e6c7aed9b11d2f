#include "lilxing/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lilxing {

LinearFit ols(const Eigen::Ref<const Eigen::VectorXd>& x,
              const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("ols: need at least two paired points");
  }
  Eigen::MatrixXd design(x.size(), 2);
  design.col(0).setOnes();
  design.col(1) = x;
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
  LinearFit fit;
  fit.intercept = beta[0];
  fit.slope = beta[1];
  fit.residuals = y - design * beta;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  fit.r_squared = ss_tot > 0 ? 1.0 - fit.residuals.squaredNorm() / ss_tot : 1.0;
  return fit;
}

double ols_slope_stderr(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& var) {
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const double sxx = dx.square().sum();
  if (!(sxx > 0)) throw std::invalid_argument("ols_slope_stderr: x has no spread");
  return std::sqrt((dx.square() * var.array()).sum()) / sxx;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; Q is 1 to 1e-10 here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsReport ks_two_sample(std::vector<double> a, std::vector<double> b, double level) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  if (!(level > 0 && level < 1)) throw std::invalid_argument("ks_two_sample: level in (0,1)");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size());
  const double nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  KsReport r;
  r.statistic = d;
  const double ne = na * nb / (na + nb);
  r.threshold = std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(ne);
  const double root = std::sqrt(ne);
  r.p_value = kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
  r.passed = d <= r.threshold;
  return r;
}

}  // namespace lilxing
