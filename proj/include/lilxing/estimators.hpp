#pragma once

// Monte Carlo estimates of LIL-scale crossing probabilities, hitting-time
// histograms for Lerche boundaries, and rate fits of log p against
// log log(1/t).

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "lilxing/analytic.hpp"
#include "lilxing/paths.hpp"
#include "lilxing/sde.hpp"

namespace lilxing {

struct BrownianModel {};
using Model = std::variant<BrownianModel, DiffusionSpec>;

std::string model_tag(const Model& model);

/// Default grid for T_a experiments. Hits below u_min are lost, and T_a has
/// mass spread over many octaves in log(1/u), so the grid runs deep.
inline constexpr GridParams kLercheGrid{1000, 4};

struct McOptions {
  std::uint64_t n = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  bool bridge_correction = true;
  GridParams grid{};
};

struct CrossingEstimate {
  double p_hat = 0;
  double std_err = 0;
  std::uint64_t n = 0;     // replicates used
  std::uint64_t hits = 0;
  std::uint64_t excluded = 0;  // diverged diffusion paths
  double t = 0;
  double epsilon = 0;
  double sigma0 = 1;
  double u_min = 0;
  double truncation_bound = 0;
  std::string model_tag;
};

/// p_hat = hits/n and std_err = sqrt(p_hat (1 - p_hat) / n).
CrossingEstimate make_estimate(std::uint64_t hits, std::uint64_t n);

/// P(sup_{0<u<t} X_u/h(u) >= sigma0 q(t)) by simulation on the geometric grid
/// [t 2^{-octaves}, t]. For Brownian motion sigma0 = 1.
CrossingEstimate mc_crossing_prob(const Model& model, double t, const DeviationLevel& level,
                                  const McOptions& opts);

/// P(sup_{0<u<=t} W_u >= level) with the same grid, scan and bridge
/// correction, for calibration against the reflection principle.
CrossingEstimate mc_constant_boundary(double t, double level, const McOptions& opts);

/// Monte Carlo P(T_a < t1) for the Lerche boundary psi_a.
CrossingEstimate ta_prob(const Boundary& boundary, const McOptions& opts);
CrossingEstimate ta_prob(double a, const DeviationLevel& level, const McOptions& opts);

struct HittingHistogram {
  double a = 0;
  Eigen::VectorXd edges;               // log-spaced over [u_min, t1], octaves_per_bin apart
  std::vector<std::uint64_t> counts;   // hits per bin
  std::uint64_t n = 0;
  std::uint64_t hits = 0;              // paths crossing within the grid
  std::uint64_t below_grid = 0;        // hits detected at the first knot
  Eigen::VectorXd density;             // counts / (hits * width)
  bool reliable = true;                // hits >= 100
  std::string message;
};

/// Empirical law of T_a conditioned on T_a < t1. Hit times are placed at the
/// geometric midpoint of the cell in which the crossing was detected.
HittingHistogram hitting_time_histogram(const Boundary& boundary, const McOptions& opts,
                                        int octaves_per_bin = 1);

/// Lerche bin averages int_bin p_a / (int_{u_min}^{t1} p_a * width) on the
/// histogram's edges. Simulated hits below the first knot are invisible, so
/// both sides are conditioned on the simulated window.
Eigen::VectorXd lerche_bin_density(const Boundary& boundary, const Eigen::VectorXd& edges);

struct RateFit {
  Eigen::VectorXd loglog;  // L_i = log log(1/t_i)
  Eigen::VectorXd log_p;
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  double slope_stderr = 0;
  std::vector<double> excluded_t;  // zero-hit points left out
};

/// OLS of log p_hat on log log(1/t); slope_stderr uses per-point variance
/// (std_err / p_hat)^2.
RateFit ldp_rate_fit(const std::vector<CrossingEstimate>& estimates);
/// Noise-free variant for analytic values.
RateFit ldp_rate_fit(const std::vector<double>& t, const std::vector<double>& p);

struct IntervalEstimate {
  CrossingEstimate interval;  // sup statistic in [x_lo, x_hi)
  CrossingEstimate upper_lo;  // sup statistic >= x_lo
  CrossingEstimate upper_hi;  // sup statistic >= x_hi
  /// interval.p_hat - (upper_lo.p_hat - upper_hi.p_hat); zero under common
  /// random numbers.
  double identity_gap = 0;
};

/// P(sup X/h in [x_lo, x_hi)), with x in the units of the sup statistic
/// itself. x_lo = -inf is allowed. The event is "reaches x_lo but not x_hi",
/// evaluated with the same paths and bridge uniforms for both ends.
IntervalEstimate interval_probability(const Model& model, double t, double x_lo, double x_hi,
                                      const McOptions& opts);

}  // namespace lilxing
