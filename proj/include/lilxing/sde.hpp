#pragma once

// Ito diffusions dX = b(X,u) du + sigma(X,u) dW started at 0, simulated by
// left-point Euler-Maruyama on the same time grids as the Brownian paths,
// plus the pathwise diagnostics that reduce the diffusion case to Brownian
// motion: drift functional, quadratic-variation sandwich, r(t), the DDS time
// change and the weak large-deviation assumption.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lilxing/paths.hpp"
#include "lilxing/stats.hpp"

namespace lilxing {

enum class Family { constant, ou, state_vol, custom };

struct DiffusionSpec {
  using Coefficient = std::function<double(double x, double u)>;

  Coefficient drift;
  Coefficient diffusion;
  double sigma0 = 1.0;
  double c1 = 1.0;  // radius of Assumption (iii)
  double c2 = 1.0;  // claimed power of Assumption (iii)
  Family family = Family::custom;
  double parameter = 0.0;  // theta for ou, beta for state_vol

  /// b = 0, sigma = sigma0.
  static DiffusionSpec constant(double sigma0 = 1.0);
  /// b = -theta x, sigma = sigma0.
  static DiffusionSpec ou(double theta, double sigma0 = 1.0);
  /// b = 0, sigma = sigma0 (1 + beta x^2).
  static DiffusionSpec state_vol(double beta, double sigma0 = 1.0);
  static DiffusionSpec custom(Coefficient drift, Coefficient diffusion, double sigma0);

  double b(double x, double u) const;
  double sigma(double x, double u) const;
  std::string tag() const;
};

struct DiffusionPath {
  GridPtr grid;
  Eigen::VectorXd x;          // X at each knot
  Eigen::VectorXd qv;         // <X> at each knot
  Eigen::VectorXd drift_int;  // int_0^u b(X_v, v) dv at each knot
  Eigen::VectorXd sigma_sq;   // sigma^2(X_i, u_i), the left-point variance of cell i
  BrownianPath driving;       // driving Brownian values at the knots
  Eigen::VectorXd increments; // W(u_min), then W(u_{i+1}) - W(u_i)
  bool diverged = false;
};

/// |X| beyond this aborts the path; estimators exclude and count it.
inline constexpr double kDivergenceGuard = 1e6;

/// X(u_min) = sigma0 W(u_min), then X_{i+1} = X_i + b dt + sigma dW with
/// coefficients at the left knot. <X> starts at sigma0^2 u_min and the drift
/// integral at b(0,0) u_min.
DiffusionPath euler_maruyama(const DiffusionSpec& spec, const GridPtr& grid, PathRng& rng);
/// Refills an existing path (buffers reused); returns false on divergence.
bool euler_maruyama_into(const DiffusionSpec& spec, const GridPtr& grid, PathRng& rng,
                         DiffusionPath& path);

/// D_t = max over knots of |int_0^u b dv| / h(u).
double drift_functional(const DiffusionPath& path);

/// If max|X| < c1, checks D_t <= c sqrt(t / (2 log log(1/t))); vacuous otherwise.
bool drift_bound_check(const DiffusionPath& path, double c, double c1);

/// g(u) = sup_{|x| <= c1, s < u} |sigma^2(x,s) - sigma0^2|. Closed form for the
/// built-in families, 1000 x 1000 grid maximisation for custom specs.
double qv_modulus(const DiffusionSpec& spec, double u, double c1);
double qv_modulus_grid(const DiffusionSpec& spec, double u, double c1, int points = 1000);

struct QvCheck {
  bool passed = true;
  double slack = 0;          // discretisation slack added to the bound
  double worst_excess = 0;   // max of |<X>_u - sigma0^2 u| - u g(u) - slack
  std::optional<Eigen::Index> first_violation;
};

/// |<X>_u - sigma0^2 u| <= u g(u) + slack at every knot reached before
/// |X| first hits c1. The slack is the left/right rectangle-rule gap
/// sum |sigma^2_{i+1} - sigma^2_i| dt_i plus a rounding allowance.
QvCheck qv_deviation_check(const DiffusionPath& path, const DiffusionSpec& spec, double c1);

/// r(t) = sup_{0<u<t} sqrt(u) sqrt(3 g(u) log(1/g(u))) / h(u), taken over a
/// log grid spanning 100 octaves below t at four points per octave. g = 0
/// gives 0; g >= 1/e throws DomainError.
double r_bound(double t, const DiffusionSpec& spec, double c1);

struct GridParams {
  int octaves = 40;
  int points_per_octave = 32;
};

struct DdsOptions {
  GridParams grid{20, 8};
  std::uint64_t seed = 1;
  int workers = 1;
  double level = 0.01;
};

/// Two-sample KS comparison of max_i X(u_i)/h(u_i) for the driftless spec
/// against max_i sigma0 W(u_i)/h(u_i) from independent Brownian paths.
KsReport dds_equivalence_check(const DiffusionSpec& spec, double t, std::uint64_t n,
                               const DdsOptions& opts = {});

struct WeakLdPoint {
  double t;
  std::uint64_t hits;
  std::uint64_t n;
  double p_hat;
  double std_err;
};

struct WeakLdReport {
  std::vector<WeakLdPoint> points;
  std::optional<double> fitted_power;  // slope of log p_hat on log t
  int zero_hit_count = 0;
  std::string message;
};

struct WeakLdOptions {
  GridParams grid{20, 16};
  std::uint64_t seed = 1;
  int workers = 1;
  bool bridge_correction = true;
};

/// Monte Carlo estimates of P(sup_{0<u<t} |X_u| >= c1) over t_list and the
/// fitted power of their decay in t. Zero-hit points are reported, not fitted.
WeakLdReport weak_ld_check(const DiffusionSpec& spec, double c1,
                           const std::vector<double>& t_list, std::uint64_t n,
                           const WeakLdOptions& opts = {});

}  // namespace lilxing
