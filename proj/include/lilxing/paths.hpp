#pragma once

// Brownian paths on time grids near zero, discrete LIL-scaled suprema with
// Brownian-bridge crossing correction, and the Levy modulus statistic.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>

#include "lilxing/analytic.hpp"
#include "lilxing/rng.hpp"

namespace lilxing {

struct TimeGrid {
  enum class Layout { geometric, uniform };

  Eigen::VectorXd knots;     // strictly increasing, knots[0] = u_min, back = t_max
  Eigen::VectorXd std_devs;  // sqrt(u_min), then sqrt of each step
  double t_max = 0;
  double u_min = 0;
  int octaves = 0;
  int points_per_octave = 0;
  Layout layout = Layout::geometric;

  Eigen::Index size() const { return knots.size(); }
  double step(Eigen::Index i) const { return knots[i + 1] - knots[i]; }
};

using GridPtr = std::shared_ptr<const TimeGrid>;

/// Geometric grid on [t 2^{-octaves}, t] for LIL experiments; t < e^{-e}.
TimeGrid make_geometric_grid(double t, int octaves, int points_per_octave);
/// Same layout without the LIL domain restriction (any t > 0).
TimeGrid geometric_grid(double t, int octaves, int points_per_octave);
/// n equally spaced knots t/n, 2t/n, ..., t.
TimeGrid uniform_grid(double t, Eigen::Index n);

/// Union bound on P(sup_{0<u<u_min} W_u/h(u) >= q(t)), the crossing mass the
/// grid cannot see. Blocks [U/rho, U] below u_min are bounded by the
/// reflection principle with the boundary frozen at its lower end; the block
/// ratio rho is chosen to minimise the bound. Returns +inf when no ratio
/// gives a convergent series.
double truncation_error_bound(const TimeGrid& grid, const DeviationLevel& level);

struct BrownianPath {
  GridPtr grid;
  Eigen::VectorXd values;
  SeedRecord seed;
};

/// W(u_min) ~ N(0, u_min) followed by independent N(0, step) increments.
void fill_brownian(const TimeGrid& grid, PathRng& rng, Eigen::Ref<Eigen::VectorXd> out);
BrownianPath sample_brownian(const GridPtr& grid, PathRng& rng);

/// Exact crossing probability of a Brownian bridge with variance rate
/// `variance` over a cell of length dt against the straight line joining
/// boundary values, given both endpoints lie below it.
inline double bridge_crossing_probability(double gap_left, double gap_right, double dt,
                                          double variance = 1.0) {
  if (gap_left <= 0 || gap_right <= 0) return 1.0;
  return std::exp(-2.0 * gap_left * gap_right / (variance * dt));
}

struct FirstCrossing {
  Eigen::Index cell;  // knot index i: crossed in (u_{i-1}, u_i]; i = 0 means by u_min
  bool via_bridge;
};

/// Scans values against a boundary sampled at the knots. With bridge
/// correction each cell whose endpoints are both below the boundary fires
/// with the bridge probability using the counter-based uniform of (key, cell).
/// `variances`, when given, is the per-cell variance rate (diffusions).
std::optional<FirstCrossing> first_crossing(const TimeGrid& grid,
                                            const Eigen::Ref<const Eigen::VectorXd>& values,
                                            const Eigen::Ref<const Eigen::VectorXd>& boundary,
                                            bool bridge_correction, std::uint64_t key,
                                            const Eigen::VectorXd* variances = nullptr);

/// h(u) at every knot; all knots must be < 1/e.
Eigen::VectorXd lil_scale_at_knots(const TimeGrid& grid);

struct SupScaled {
  double sup_stat;
  bool crossed;
};

/// max_i W(u_i)/h(u_i) and whether the path reaches sqrt(1+eps+d(t)) h(u).
SupScaled sup_scaled(const BrownianPath& path, const DeviationLevel& level,
                     bool bridge_correction = true);

/// f(delta) = sqrt(2 delta log(1/delta)).
double levy_modulus_scale(double delta);

/// max_{|t-s| <= delta} |W_t - W_s| / f(delta) after rescaling the path to
/// [0, 1]; the origin W_0 = 0 is included.
double levy_modulus_stat(const BrownianPath& path, double delta);

}  // namespace lilxing
