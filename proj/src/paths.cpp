#include "lilxing/paths.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

namespace lilxing {

namespace {

// exp(-38) < 2^-54, below the smallest value cell_uniform can return, so
// cells with a larger bridge exponent can never fire and exp is skipped.
constexpr double kBridgeExponentCutoff = 38.0;

void finish_grid(TimeGrid& g) {
  const Eigen::Index n = g.knots.size();
  g.std_devs.resize(n);
  g.std_devs[0] = std::sqrt(g.knots[0]);
  for (Eigen::Index i = 1; i < n; ++i) {
    g.std_devs[i] = std::sqrt(g.knots[i] - g.knots[i - 1]);
  }
  g.u_min = g.knots[0];
  g.t_max = g.knots[n - 1];
}

}  // namespace

TimeGrid geometric_grid(double t, int octaves, int points_per_octave) {
  if (!(t > 0)) throw DomainError("geometric_grid: t must be positive");
  if (octaves < 1 || points_per_octave < 1) {
    throw DomainError("geometric_grid: octaves and points_per_octave must be >= 1");
  }
  TimeGrid g;
  g.octaves = octaves;
  g.points_per_octave = points_per_octave;
  g.layout = TimeGrid::Layout::geometric;
  const Eigen::Index n = Eigen::Index(octaves) * points_per_octave + 1;
  g.knots.resize(n);
  const double u_min = std::ldexp(t, -octaves);
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    g.knots[k] = u_min * std::exp2(double(k) / points_per_octave);
  }
  g.knots[0] = u_min;
  g.knots[n - 1] = t;
  finish_grid(g);
  return g;
}

TimeGrid make_geometric_grid(double t, int octaves, int points_per_octave) {
  if (!(t > 0) || !(t < std::exp(-std::numbers::e))) {
    throw DomainError("make_geometric_grid: t must lie in (0, e^-e)");
  }
  return geometric_grid(t, octaves, points_per_octave);
}

TimeGrid uniform_grid(double t, Eigen::Index n) {
  if (!(t > 0) || n < 1) throw DomainError("uniform_grid: need t > 0 and n >= 1");
  TimeGrid g;
  g.layout = TimeGrid::Layout::uniform;
  g.knots.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) g.knots[k] = t * double(k + 1) / double(n);
  g.knots[n - 1] = t;
  finish_grid(g);
  return g;
}

double truncation_error_bound(const TimeGrid& grid, const DeviationLevel& level) {
  const double c = level.q(grid.t_max);
  const double c2 = c * c;
  const double log_inv_umin = -std::log(grid.u_min);
  if (!(log_inv_umin > 1.0)) throw DomainError("truncation_error_bound: u_min too large");

  // Block k covers [U_k / rho, U_k] with U_k = u_min rho^{-k}. On it
  //   P(sup_{u <= U_k} W_u >= c h(U_k/rho)) = 2 sf(c sqrt(2 LL(U_k/rho) / rho)).
  // For large k the Mills bound 2 n(z)/z and an integral comparison sum the
  // rest in closed form; this needs c^2/rho > 1.
  auto bound_for_ratio = [&](double rho) {
    const double log_rho = std::log(rho);
    const double power = c2 / rho;
    if (!(power > 1.0)) return std::numeric_limits<double>::infinity();
    constexpr int kExplicit = 4000;
    double sum = 0.0;
    for (int k = 0; k < kExplicit; ++k) {
      const double ell = log_inv_umin + (k + 1) * log_rho;  // log(rho / U_k)
      sum += 2.0 * gaussian_sf(c * std::sqrt(2.0 * std::log(ell) / rho));
    }
    // Remainder k >= kExplicit: terms <= 2 n(z_k)/z_k with z_k increasing,
    // n(z_k) = ell_k^{-power} / sqrt(2 pi).
    const double ell0 = log_inv_umin + kExplicit * log_rho;
    const double z0 = c * std::sqrt(2.0 * std::log(ell0) / rho);
    const double tail = 2.0 / (std::sqrt(2.0 * std::numbers::pi) * z0) *
                        std::pow(ell0, 1.0 - power) / ((power - 1.0) * log_rho);
    return sum + tail;
  };

  double best = std::numeric_limits<double>::infinity();
  for (double rho : {1.005, 1.01, 1.02, 1.05, 1.1, 1.2, 1.35, 1.5, 1.75, 2.0}) {
    best = std::min(best, bound_for_ratio(rho));
  }
  return best;
}

void fill_brownian(const TimeGrid& grid, PathRng& rng, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = grid.size();
  double w = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    w += grid.std_devs[i] * rng.gaussian();
    out[i] = w;
  }
}

BrownianPath sample_brownian(const GridPtr& grid, PathRng& rng) {
  BrownianPath path{grid, Eigen::VectorXd(grid->size()), rng.seed()};
  fill_brownian(*grid, rng, path.values);
  return path;
}

std::optional<FirstCrossing> first_crossing(const TimeGrid& grid,
                                            const Eigen::Ref<const Eigen::VectorXd>& values,
                                            const Eigen::Ref<const Eigen::VectorXd>& boundary,
                                            bool bridge_correction, std::uint64_t key,
                                            const Eigen::VectorXd* variances) {
  const Eigen::Index n = grid.size();
  double gap_prev = boundary[0] - values[0];
  if (gap_prev <= 0) return FirstCrossing{0, false};
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double gap = boundary[i + 1] - values[i + 1];
    if (gap <= 0) return FirstCrossing{i + 1, false};
    if (bridge_correction) {
      const double var = variances ? (*variances)[i] : 1.0;
      const double exponent = 2.0 * gap_prev * gap / (var * grid.step(i));
      if (exponent < kBridgeExponentCutoff &&
          cell_uniform(key, std::uint64_t(i)) < std::exp(-exponent)) {
        return FirstCrossing{i + 1, true};
      }
    }
    gap_prev = gap;
  }
  return std::nullopt;
}

Eigen::VectorXd lil_scale_at_knots(const TimeGrid& grid) {
  Eigen::VectorXd h(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) h[i] = lil_scale(grid.knots[i]);
  return h;
}

SupScaled sup_scaled(const BrownianPath& path, const DeviationLevel& level,
                     bool bridge_correction) {
  const TimeGrid& grid = *path.grid;
  const Eigen::VectorXd h = lil_scale_at_knots(grid);
  const double sup = (path.values.array() / h.array()).maxCoeff();
  const Eigen::VectorXd boundary = level.q(grid.t_max) * h;
  const bool crossed =
      first_crossing(grid, path.values, boundary, bridge_correction, path.seed.key())
          .has_value();
  return {sup, crossed};
}

double levy_modulus_scale(double delta) {
  if (!(delta > 0 && delta < 1)) throw DomainError("levy_modulus_scale: delta in (0,1)");
  return std::sqrt(2.0 * delta * std::log(1.0 / delta));
}

double levy_modulus_stat(const BrownianPath& path, double delta) {
  const TimeGrid& grid = *path.grid;
  const double span = grid.t_max;
  const double f = levy_modulus_scale(delta);
  const Eigen::Index n = grid.size();

  // Rescale to [0,1]: tau = u / span, B(tau) = W(u) / sqrt(span).
  const double value_scale = 1.0 / std::sqrt(span);
  std::vector<double> tau(n + 1), w(n + 1);
  tau[0] = 0.0;
  w[0] = 0.0;
  double max_step = grid.knots[0] / span;
  for (Eigen::Index i = 0; i < n; ++i) {
    tau[i + 1] = grid.knots[i] / span;
    w[i + 1] = path.values[i] * value_scale;
    if (i > 0) max_step = std::max(max_step, (grid.knots[i] - grid.knots[i - 1]) / span);
  }
  if (delta < max_step * (1.0 - 1e-12)) {
    throw DomainError("levy_modulus_stat: delta below grid resolution");
  }

  // Sliding window over knots within delta; monotone deques give the running
  // max and min so the window range is O(1) amortised.
  std::deque<std::size_t> hi, lo;
  std::size_t left = 0;
  double best = 0.0;
  for (std::size_t j = 0; j < tau.size(); ++j) {
    while (!hi.empty() && w[hi.back()] <= w[j]) hi.pop_back();
    hi.push_back(j);
    while (!lo.empty() && w[lo.back()] >= w[j]) lo.pop_back();
    lo.push_back(j);
    while (tau[j] - tau[left] > delta * (1.0 + 1e-12)) ++left;
    while (hi.front() < left) hi.pop_front();
    while (lo.front() < left) lo.pop_front();
    best = std::max(best, w[hi.front()] - w[lo.front()]);
  }
  return best / f;
}

}  // namespace lilxing
