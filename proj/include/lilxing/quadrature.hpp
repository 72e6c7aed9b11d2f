#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <climits>
#include <cstdint>

namespace lilxing::quad {

template <typename Scalar>
struct Result {
  Scalar value{0};
  Scalar abs_error{0};
  int intervals{0};  // 15-point panels evaluated
  bool converged{false};
};

/// Adaptive Gauss-Kronrod 7/15 on a finite interval (Boost.Math).
///
/// Boost bisects each panel until its K15 - G7 estimate meets the tolerance
/// or max_depth is reached. `converged` compares the summed estimate with
/// rel_tol times the L1 norm; failure is reported, not thrown.
template <typename Scalar, typename F>
Result<Scalar> integrate(F&& f, Scalar lo, Scalar hi, Scalar rel_tol, unsigned max_depth = 15) {
  std::int64_t evals = 0;
  auto counted = [&](Scalar x) {
    ++evals;
    return Scalar(f(x));
  };
  Scalar error = 0;
  Scalar l1 = 0;
  const Scalar value = boost::math::quadrature::gauss_kronrod<Scalar, 15>::integrate(
      counted, lo, hi, max_depth, rel_tol, &error, &l1);
  const int panels = int(std::min<std::int64_t>(evals / 15, INT_MAX));
  return {value, error, panels, error <= rel_tol * l1};
}

}  // namespace lilxing::quad
