#include "lilxing/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lilxing/parallel.hpp"

namespace lilxing {

namespace {

enum Stream : std::uint64_t {
  kDdsDiffusion = 0x3d1,
  kDdsBrownian = 0x3d2,
  kWeakLd = 0x3d3,
};

void require_sigma0(double sigma0) {
  if (!(sigma0 > 0)) throw DomainError("DiffusionSpec: sigma0 must be positive");
}

std::string format_param(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// DiffusionSpec
// ---------------------------------------------------------------------------

DiffusionSpec DiffusionSpec::constant(double sigma0) {
  require_sigma0(sigma0);
  DiffusionSpec s;
  s.drift = [](double, double) { return 0.0; };
  s.diffusion = [sigma0](double, double) { return sigma0; };
  s.sigma0 = sigma0;
  s.family = Family::constant;
  return s;
}

DiffusionSpec DiffusionSpec::ou(double theta, double sigma0) {
  require_sigma0(sigma0);
  DiffusionSpec s;
  s.drift = [theta](double x, double) { return -theta * x; };
  s.diffusion = [sigma0](double, double) { return sigma0; };
  s.sigma0 = sigma0;
  s.family = Family::ou;
  s.parameter = theta;
  return s;
}

DiffusionSpec DiffusionSpec::state_vol(double beta, double sigma0) {
  require_sigma0(sigma0);
  DiffusionSpec s;
  s.drift = [](double, double) { return 0.0; };
  s.diffusion = [sigma0, beta](double x, double) { return sigma0 * (1.0 + beta * x * x); };
  s.sigma0 = sigma0;
  s.family = Family::state_vol;
  s.parameter = beta;
  return s;
}

DiffusionSpec DiffusionSpec::custom(Coefficient drift, Coefficient diffusion, double sigma0) {
  require_sigma0(sigma0);
  DiffusionSpec s;
  s.drift = std::move(drift);
  s.diffusion = std::move(diffusion);
  s.sigma0 = sigma0;
  s.family = Family::custom;
  return s;
}

double DiffusionSpec::b(double x, double u) const { return drift(x, u); }
double DiffusionSpec::sigma(double x, double u) const { return diffusion(x, u); }

std::string DiffusionSpec::tag() const {
  switch (family) {
    case Family::constant: return "constant";
    case Family::ou: return "ou(" + format_param(parameter) + ")";
    case Family::state_vol: return "state_vol(" + format_param(parameter) + ")";
    case Family::custom: return "custom";
  }
  return "custom";
}

// ---------------------------------------------------------------------------
// Euler-Maruyama
// ---------------------------------------------------------------------------

bool euler_maruyama_into(const DiffusionSpec& spec, const GridPtr& grid, PathRng& rng,
                         DiffusionPath& path) {
  const TimeGrid& g = *grid;
  const Eigen::Index n = g.size();
  path.grid = grid;
  path.x.resize(n);
  path.qv.resize(n);
  path.drift_int.resize(n);
  path.sigma_sq.resize(n);
  path.increments.resize(n);
  path.driving.grid = grid;
  path.driving.seed = rng.seed();
  path.driving.values.resize(n);
  path.diverged = false;

  for (Eigen::Index i = 0; i < n; ++i) path.increments[i] = g.std_devs[i] * rng.gaussian();

  const double s0 = spec.sigma0;
  double w = path.increments[0];
  double x = s0 * w;
  double qv = s0 * s0 * g.u_min;
  double drift = spec.b(0.0, 0.0) * g.u_min;
  path.driving.values[0] = w;
  path.x[0] = x;
  path.qv[0] = qv;
  path.drift_int[0] = drift;

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double u = g.knots[i];
    const double dt = g.step(i);
    const double bx = spec.b(x, u);
    const double sx = spec.sigma(x, u);
    path.sigma_sq[i] = sx * sx;
    const double dw = path.increments[i + 1];
    w += dw;
    x += bx * dt + sx * dw;
    qv += sx * sx * dt;
    drift += bx * dt;
    path.driving.values[i + 1] = w;
    path.x[i + 1] = x;
    path.qv[i + 1] = qv;
    path.drift_int[i + 1] = drift;
    if (!(std::abs(x) <= kDivergenceGuard)) {
      path.diverged = true;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (Eigen::Index j = i + 2; j < n; ++j) {
        path.x[j] = path.qv[j] = path.drift_int[j] = nan;
      }
      path.sigma_sq.tail(n - i - 1).setConstant(nan);
      return false;
    }
  }
  const double sl = spec.sigma(x, g.knots[n - 1]);
  path.sigma_sq[n - 1] = sl * sl;
  return true;
}

DiffusionPath euler_maruyama(const DiffusionSpec& spec, const GridPtr& grid, PathRng& rng) {
  DiffusionPath path;
  euler_maruyama_into(spec, grid, rng, path);
  return path;
}

// ---------------------------------------------------------------------------
// Drift functional
// ---------------------------------------------------------------------------

double drift_functional(const DiffusionPath& path) {
  const Eigen::VectorXd h = lil_scale_at_knots(*path.grid);
  return (path.drift_int.array().abs() / h.array()).maxCoeff();
}

bool drift_bound_check(const DiffusionPath& path, double c, double c1) {
  if (path.diverged) return true;
  if (!(path.x.cwiseAbs().maxCoeff() < c1)) return true;
  const double t = path.grid->t_max;
  // sup_{u<=t} u/h(u) is attained at u = t since u/h(u) increases for small u.
  const double bound = c * std::sqrt(t / (2.0 * std::log(std::log(1.0 / t))));
  return drift_functional(path) <= bound * (1.0 + 1e-12);
}

// ---------------------------------------------------------------------------
// Quadratic variation
// ---------------------------------------------------------------------------

double qv_modulus_grid(const DiffusionSpec& spec, double u, double c1, int points) {
  if (!(u > 0) || !(c1 >= 0) || points < 2) throw DomainError("qv_modulus_grid: bad input");
  const double s0sq = spec.sigma0 * spec.sigma0;
  double g = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = -c1 + 2.0 * c1 * i / (points - 1);
    for (int j = 0; j < points; ++j) {
      const double s = u * j / (points - 1);
      const double sig = spec.sigma(x, s);
      g = std::max(g, std::abs(sig * sig - s0sq));
    }
  }
  return g;
}

double qv_modulus(const DiffusionSpec& spec, double u, double c1) {
  if (!(u > 0)) throw DomainError("qv_modulus: u must be positive");
  const double s0sq = spec.sigma0 * spec.sigma0;
  switch (spec.family) {
    case Family::constant:
    case Family::ou:
      return 0.0;
    case Family::state_vol: {
      const double f = 1.0 + std::abs(spec.parameter) * c1 * c1;
      return s0sq * (f * f - 1.0);
    }
    case Family::custom:
      break;
  }
  return qv_modulus_grid(spec, u, c1);
}

QvCheck qv_deviation_check(const DiffusionPath& path, const DiffusionSpec& spec, double c1) {
  QvCheck check;
  const TimeGrid& g = *path.grid;
  const double s0sq = spec.sigma0 * spec.sigma0;
  const Eigen::Index n = g.size();

  // Rectangle-rule slack accumulated along the path.
  double slack = 0.0;
  double sup_abs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(path.x[i])) break;
    sup_abs = std::max(sup_abs, std::abs(path.x[i]));
    if (!(sup_abs < c1)) break;
    if (i > 0) {
      slack += std::abs(path.sigma_sq[i] - path.sigma_sq[i - 1]) * g.step(i - 1);
    }
    const double u = g.knots[i];
    const double allowance = slack + 1e-12 * (path.qv[i] + s0sq * u);
    const double excess = std::abs(path.qv[i] - s0sq * u) - u * qv_modulus(spec, u, c1) - allowance;
    check.slack = std::max(check.slack, allowance);
    if (excess > 0) {
      if (check.passed) check.first_violation = i;
      check.passed = false;
      check.worst_excess = std::max(check.worst_excess, excess);
    }
  }
  return check;
}

double r_bound(double t, const DiffusionSpec& spec, double c1) {
  if (!(t > 0 && t < 1.0 / std::numbers::e)) throw DomainError("r_bound: t must lie in (0, 1/e)");
  constexpr int kOctaves = 100;
  constexpr int kPerOctave = 4;
  double r = 0.0;
  for (int k = 0; k <= kOctaves * kPerOctave; ++k) {
    const double u = t * std::exp2(-double(k) / kPerOctave);
    const double g = qv_modulus(spec, u, c1);
    if (g == 0.0) continue;
    if (!(g < 1.0 / std::numbers::e)) {
      throw DomainError("r_bound: g(u) >= 1/e, the modulus is too large for the bound");
    }
    r = std::max(r, std::sqrt(u) * std::sqrt(3.0 * g * std::log(1.0 / g)) / lil_scale(u));
  }
  return r;
}

// ---------------------------------------------------------------------------
// DDS time change
// ---------------------------------------------------------------------------

KsReport dds_equivalence_check(const DiffusionSpec& spec, double t, std::uint64_t n,
                               const DdsOptions& opts) {
  if (n == 0) throw std::invalid_argument("dds_equivalence_check: n must be positive");
  for (double x : {-1.0, -0.1, 0.0, 0.1, 1.0}) {
    if (spec.b(x, 0.0) != 0.0 || spec.b(x, t) != 0.0) {
      throw std::invalid_argument("dds_equivalence_check: spec must be driftless");
    }
  }
  const auto grid = std::make_shared<const TimeGrid>(
      make_geometric_grid(t, opts.grid.octaves, opts.grid.points_per_octave));
  const Eigen::VectorXd h = lil_scale_at_knots(*grid);

  std::vector<double> diffusion_sup(n), brownian_sup(n);
  for_each_replicate(
      n, opts.workers, [] { return DiffusionPath{}; },
      [&](DiffusionPath& path, std::uint64_t i) {
        PathRng rng(SeedRecord{opts.seed, kDdsDiffusion, i});
        euler_maruyama_into(spec, grid, rng, path);
        diffusion_sup[i] = path.diverged ? std::numeric_limits<double>::infinity()
                                         : (path.x.array() / h.array()).maxCoeff();
      });
  for_each_replicate(
      n, opts.workers, [&] { return Eigen::VectorXd(grid->size()); },
      [&](Eigen::VectorXd& w, std::uint64_t i) {
        PathRng rng(SeedRecord{opts.seed, kDdsBrownian, i});
        fill_brownian(*grid, rng, w);
        brownian_sup[i] = spec.sigma0 * (w.array() / h.array()).maxCoeff();
      });
  return ks_two_sample(std::move(diffusion_sup), std::move(brownian_sup), opts.level);
}

// ---------------------------------------------------------------------------
// Weak large deviations
// ---------------------------------------------------------------------------

WeakLdReport weak_ld_check(const DiffusionSpec& spec, double c1,
                           const std::vector<double>& t_list, std::uint64_t n,
                           const WeakLdOptions& opts) {
  if (t_list.empty() || n == 0) throw std::invalid_argument("weak_ld_check: empty input");
  if (!(c1 > 0)) throw DomainError("weak_ld_check: c1 must be positive");
  for (std::size_t k = 1; k < t_list.size(); ++k) {
    if (!(t_list[k] < t_list[k - 1])) {
      throw std::invalid_argument("weak_ld_check: t_list must be decreasing");
    }
  }

  WeakLdReport report;
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    const double t = t_list[k];
    const auto grid = std::make_shared<const TimeGrid>(
        geometric_grid(t, opts.grid.octaves, opts.grid.points_per_octave));
    struct Tally {
      DiffusionPath path;
      std::uint64_t hits = 0;
      std::uint64_t excluded = 0;
    };
    const auto tallies = for_each_replicate(
        n, opts.workers, [] { return Tally{}; },
        [&](Tally& tally, std::uint64_t i) {
          PathRng rng(SeedRecord{opts.seed, kWeakLd + (std::uint64_t(k) << 16), i});
          if (!euler_maruyama_into(spec, grid, rng, tally.path)) {
            ++tally.excluded;
            return;
          }
          const auto& x = tally.path.x;
          if (x.cwiseAbs().maxCoeff() >= c1) {
            ++tally.hits;
            return;
          }
          if (!opts.bridge_correction) return;
          // Two one-sided bridge tests per cell against +c1 and -c1.
          const std::uint64_t key = rng.seed().key();
          for (Eigen::Index j = 0; j + 1 < x.size(); ++j) {
            const double var = tally.path.sigma_sq[j] * grid->step(j);
            const double up = std::exp(-2.0 * (c1 - x[j]) * (c1 - x[j + 1]) / var);
            const double down = std::exp(-2.0 * (c1 + x[j]) * (c1 + x[j + 1]) / var);
            const double p = 1.0 - (1.0 - up) * (1.0 - down);
            if (cell_uniform(key, std::uint64_t(j)) < p) {
              ++tally.hits;
              return;
            }
          }
        });
    std::uint64_t hits = 0, excluded = 0;
    for (const auto& tl : tallies) {
      hits += tl.hits;
      excluded += tl.excluded;
    }
    const std::uint64_t used = n - excluded;
    const double p = used ? double(hits) / double(used) : 0.0;
    report.points.push_back({t, hits, used, p, used ? std::sqrt(p * (1.0 - p) / double(used)) : 0.0});
    if (hits == 0) ++report.zero_hit_count;
  }

  std::vector<double> lx, ly;
  for (const auto& pt : report.points) {
    if (pt.hits > 0) {
      lx.push_back(std::log(pt.t));
      ly.push_back(std::log(pt.p_hat));
    }
  }
  if (lx.size() >= 2) {
    report.fitted_power =
        ols(Eigen::Map<const Eigen::VectorXd>(lx.data(), Eigen::Index(lx.size())),
            Eigen::Map<const Eigen::VectorXd>(ly.data(), Eigen::Index(ly.size())))
            .slope;
  }
  std::ostringstream msg;
  if (lx.empty()) {
    double resolution = 1.0;
    for (const auto& pt : report.points) resolution = std::min(resolution, 1.0 / double(pt.n));
    msg << "all points have zero hits: consistent with any c2 at resolution p < "
        << resolution;
  } else {
    msg << report.zero_hit_count << " of " << report.points.size()
        << " points had zero hits and were excluded from the fit";
  }
  report.message = msg.str();
  return report;
}

}  // namespace lilxing
