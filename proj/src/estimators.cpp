#include "lilxing/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "lilxing/parallel.hpp"
#include "lilxing/stats.hpp"

namespace lilxing {

namespace {

enum Stream : std::uint64_t {
  kCrossing = 0x11,
  kConstantBoundary = 0x12,
  kHitting = 0x13,
  kInterval = 0x14,
};

// Per-worker scratch for simulating one replicate of either model.
struct Simulation {
  const Model* model;
  GridPtr grid;
  Eigen::VectorXd w;
  DiffusionPath path;

  const Eigen::VectorXd* values = nullptr;
  const Eigen::VectorXd* variances = nullptr;

  // Returns false when a diffusion path diverged.
  bool run(PathRng& rng) {
    if (std::holds_alternative<BrownianModel>(*model)) {
      if (w.size() != grid->size()) w.resize(grid->size());
      fill_brownian(*grid, rng, w);
      values = &w;
      variances = nullptr;
      return true;
    }
    const auto& spec = std::get<DiffusionSpec>(*model);
    if (!euler_maruyama_into(spec, grid, rng, path)) return false;
    values = &path.x;
    variances = &path.sigma_sq;
    return true;
  }
};

double model_sigma0(const Model& model) {
  if (const auto* spec = std::get_if<DiffusionSpec>(&model)) return spec->sigma0;
  return 1.0;
}

struct Counts {
  std::uint64_t hits = 0;
  std::uint64_t excluded = 0;
};

CrossingEstimate run_crossing(const Model& model, const GridPtr& grid,
                              const Eigen::VectorXd& boundary, std::uint64_t stream,
                              const McOptions& opts) {
  if (opts.n == 0) throw std::invalid_argument("Monte Carlo: n must be >= 1");
  struct State {
    Simulation sim;
    Counts counts;
  };
  const auto states = for_each_replicate(
      opts.n, opts.workers, [&] { return State{Simulation{&model, grid, {}, {}}, {}}; },
      [&](State& st, std::uint64_t i) {
        PathRng rng(SeedRecord{opts.seed, stream, i});
        if (!st.sim.run(rng)) {
          ++st.counts.excluded;
          return;
        }
        if (first_crossing(*grid, *st.sim.values, boundary, opts.bridge_correction,
                           rng.seed().key(), st.sim.variances)) {
          ++st.counts.hits;
        }
      });
  Counts total;
  for (const auto& st : states) {
    total.hits += st.counts.hits;
    total.excluded += st.counts.excluded;
  }
  if (total.excluded == opts.n) {
    throw std::runtime_error("Monte Carlo: every path diverged");
  }
  CrossingEstimate est = make_estimate(total.hits, opts.n - total.excluded);
  est.excluded = total.excluded;
  est.u_min = grid->u_min;
  est.model_tag = model_tag(model);
  return est;
}

}  // namespace

std::string model_tag(const Model& model) {
  if (const auto* spec = std::get_if<DiffusionSpec>(&model)) return spec->tag();
  return "bm";
}

CrossingEstimate make_estimate(std::uint64_t hits, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("make_estimate: n must be >= 1");
  if (hits > n) throw std::invalid_argument("make_estimate: hits exceed n");
  CrossingEstimate e;
  e.hits = hits;
  e.n = n;
  e.p_hat = double(hits) / double(n);
  e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / double(n));
  return e;
}

CrossingEstimate mc_crossing_prob(const Model& model, double t, const DeviationLevel& level,
                                  const McOptions& opts) {
  const auto grid = std::make_shared<const TimeGrid>(
      make_geometric_grid(t, opts.grid.octaves, opts.grid.points_per_octave));
  const double sigma0 = model_sigma0(model);
  const Eigen::VectorXd boundary = sigma0 * level.q(t) * lil_scale_at_knots(*grid);
  CrossingEstimate est = run_crossing(model, grid, boundary, kCrossing, opts);
  est.t = t;
  est.epsilon = level.epsilon();
  est.sigma0 = sigma0;
  est.truncation_bound = truncation_error_bound(*grid, level);
  return est;
}

CrossingEstimate mc_constant_boundary(double t, double level, const McOptions& opts) {
  const auto grid = std::make_shared<const TimeGrid>(
      geometric_grid(t, opts.grid.octaves, opts.grid.points_per_octave));
  const Eigen::VectorXd boundary = Eigen::VectorXd::Constant(grid->size(), level);
  const Model model = BrownianModel{};
  CrossingEstimate est = run_crossing(model, grid, boundary, kConstantBoundary, opts);
  est.t = t;
  // Mass above the level before u_min: the reflection tail over (0, u_min].
  est.truncation_bound = reflection_sup_tail(grid->u_min, level);
  return est;
}

namespace {

Eigen::VectorXd psi_at_knots(const Boundary& b, const TimeGrid& grid) {
  Eigen::VectorXd psi(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) psi[i] = b.psi(grid.knots[i]);
  return psi;
}

GridPtr lerche_grid(const Boundary& b, const GridParams& params) {
  if (!(b.a() >= 100.0)) throw DomainError("Lerche experiments require a >= 100");
  return std::make_shared<const TimeGrid>(
      geometric_grid(b.t1(), params.octaves, params.points_per_octave));
}

}  // namespace

CrossingEstimate ta_prob(const Boundary& boundary, const McOptions& opts) {
  const auto grid = lerche_grid(boundary, opts.grid);
  const Model model = BrownianModel{};
  CrossingEstimate est =
      run_crossing(model, grid, psi_at_knots(boundary, *grid), kHitting, opts);
  est.t = boundary.t1();
  est.epsilon = boundary.level().epsilon();
  est.model_tag = "bm:T_a";
  return est;
}

CrossingEstimate ta_prob(double a, const DeviationLevel& level, const McOptions& opts) {
  return ta_prob(Boundary(level, a), opts);
}

HittingHistogram hitting_time_histogram(const Boundary& boundary, const McOptions& opts,
                                        int octaves_per_bin) {
  if (opts.n == 0) throw std::invalid_argument("hitting_time_histogram: n must be >= 1");
  if (octaves_per_bin < 1) throw std::invalid_argument("hitting_time_histogram: octaves_per_bin >= 1");
  const auto grid = lerche_grid(boundary, opts.grid);
  const Eigen::VectorXd psi = psi_at_knots(boundary, *grid);

  HittingHistogram hist;
  hist.a = boundary.a();
  hist.n = opts.n;
  // Equal widths in log u; a shorter top bin absorbs any remainder.
  const int nbins = (opts.grid.octaves + octaves_per_bin - 1) / octaves_per_bin;
  hist.edges.resize(nbins + 1);
  for (int k = 0; k < nbins; ++k) {
    hist.edges[k] = grid->u_min * std::exp2(double(k) * octaves_per_bin);
  }
  hist.edges[nbins] = grid->t_max;
  const double log_umin = std::log(grid->u_min);
  const double bin_width_log = std::log(2.0) * octaves_per_bin;

  struct State {
    Eigen::VectorXd w;
    std::vector<std::uint64_t> counts;
    std::uint64_t hits = 0;
    std::uint64_t below = 0;
  };
  const auto states = for_each_replicate(
      opts.n, opts.workers,
      [&] { return State{Eigen::VectorXd(grid->size()), std::vector<std::uint64_t>(nbins), 0, 0}; },
      [&](State& st, std::uint64_t i) {
        PathRng rng(SeedRecord{opts.seed, kHitting, i});
        fill_brownian(*grid, rng, st.w);
        const auto hit = first_crossing(*grid, st.w, psi, opts.bridge_correction, rng.seed().key());
        if (!hit) return;
        ++st.hits;
        if (hit->cell == 0) {
          ++st.below;
          return;
        }
        // Geometric midpoint in log space; the product of two knots underflows deep in the grid.
        const double log_mid =
            0.5 * (std::log(grid->knots[hit->cell - 1]) + std::log(grid->knots[hit->cell]));
        int bin = int(std::floor((log_mid - log_umin) / bin_width_log));
        bin = std::clamp(bin, 0, nbins - 1);
        ++st.counts[bin];
      });

  hist.counts.assign(nbins, 0);
  for (const auto& st : states) {
    hist.hits += st.hits;
    hist.below_grid += st.below;
    for (int k = 0; k < nbins; ++k) hist.counts[k] += st.counts[k];
  }
  hist.density = Eigen::VectorXd::Zero(nbins);
  if (hist.hits > 0) {
    for (int k = 0; k < nbins; ++k) {
      const double width = hist.edges[k + 1] - hist.edges[k];
      hist.density[k] = double(hist.counts[k]) / (double(hist.hits) * width);
    }
  }
  hist.reliable = hist.hits >= 100;
  std::ostringstream msg;
  msg << hist.hits << " hits of " << hist.n << " paths";
  if (!hist.reliable) msg << "; fewer than 100 hits, histogram unreliable";
  hist.message = msg.str();
  return hist;
}

Eigen::VectorXd lerche_bin_density(const Boundary& boundary, const Eigen::VectorXd& edges) {
  const double mass = lerche_integral(boundary, edges[0], edges[edges.size() - 1]).value;
  Eigen::VectorXd d(edges.size() - 1);
  for (Eigen::Index k = 0; k + 1 < edges.size(); ++k) {
    const double width = edges[k + 1] - edges[k];
    d[k] = lerche_integral(boundary, edges[k], edges[k + 1]).value / (mass * width);
  }
  return d;
}

RateFit ldp_rate_fit(const std::vector<CrossingEstimate>& estimates) {
  RateFit fit;
  std::vector<double> L, lp, var;
  std::set<double> seen;
  for (const auto& e : estimates) {
    if (e.hits == 0 || !(e.p_hat > 0)) {
      fit.excluded_t.push_back(e.t);
      continue;
    }
    if (!seen.insert(e.t).second) {
      throw std::invalid_argument("ldp_rate_fit: duplicate t in estimates");
    }
    const ScaledTime st = ScaledTime::relaxed(e.t);
    L.push_back(st.loglog);
    lp.push_back(std::log(e.p_hat));
    const double rel = e.std_err / e.p_hat;
    var.push_back(rel * rel);
  }
  if (L.size() < 3) {
    throw std::invalid_argument("ldp_rate_fit: need at least 3 estimates with hits and distinct t");
  }
  fit.loglog = Eigen::Map<Eigen::VectorXd>(L.data(), Eigen::Index(L.size()));
  fit.log_p = Eigen::Map<Eigen::VectorXd>(lp.data(), Eigen::Index(lp.size()));
  const LinearFit lf = ols(fit.loglog, fit.log_p);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  fit.slope_stderr =
      ols_slope_stderr(fit.loglog, Eigen::Map<Eigen::VectorXd>(var.data(), Eigen::Index(var.size())));
  return fit;
}

RateFit ldp_rate_fit(const std::vector<double>& t, const std::vector<double>& p) {
  if (t.size() != p.size()) throw std::invalid_argument("ldp_rate_fit: size mismatch");
  std::vector<CrossingEstimate> est;
  for (std::size_t i = 0; i < t.size(); ++i) {
    CrossingEstimate e;
    e.t = t[i];
    e.p_hat = p[i];
    e.hits = p[i] > 0 ? 1 : 0;
    est.push_back(e);
  }
  return ldp_rate_fit(est);
}

IntervalEstimate interval_probability(const Model& model, double t, double x_lo, double x_hi,
                                      const McOptions& opts) {
  if (!(x_lo < x_hi)) throw std::invalid_argument("interval_probability: need x_lo < x_hi");
  if (opts.n == 0) throw std::invalid_argument("interval_probability: n must be >= 1");
  const auto grid = std::make_shared<const TimeGrid>(
      make_geometric_grid(t, opts.grid.octaves, opts.grid.points_per_octave));
  const Eigen::VectorXd h = lil_scale_at_knots(*grid);
  const bool lo_unbounded = std::isinf(x_lo) && x_lo < 0;
  const Eigen::VectorXd b_lo = lo_unbounded ? Eigen::VectorXd(h) : Eigen::VectorXd(x_lo * h);
  const Eigen::VectorXd b_hi = x_hi * h;

  struct State {
    Simulation sim;
    std::uint64_t lo = 0, hi = 0, inside = 0, excluded = 0;
  };
  const auto states = for_each_replicate(
      opts.n, opts.workers, [&] { return State{Simulation{&model, grid, {}, {}}}; },
      [&](State& st, std::uint64_t i) {
        PathRng rng(SeedRecord{opts.seed, kInterval, i});
        if (!st.sim.run(rng)) {
          ++st.excluded;
          return;
        }
        const auto key = rng.seed().key();
        const bool reach_lo =
            lo_unbounded || first_crossing(*grid, *st.sim.values, b_lo, opts.bridge_correction,
                                           key, st.sim.variances);
        const bool reach_hi = first_crossing(*grid, *st.sim.values, b_hi,
                                             opts.bridge_correction, key, st.sim.variances)
                                  .has_value();
        st.lo += reach_lo;
        st.hi += reach_hi;
        st.inside += (reach_lo && !reach_hi);
      });
  std::uint64_t lo = 0, hi = 0, inside = 0, excluded = 0;
  for (const auto& st : states) {
    lo += st.lo;
    hi += st.hi;
    inside += st.inside;
    excluded += st.excluded;
  }
  const std::uint64_t used = opts.n - excluded;
  if (used == 0) throw std::runtime_error("interval_probability: every path diverged");
  IntervalEstimate r;
  r.interval = make_estimate(inside, used);
  r.upper_lo = make_estimate(lo, used);
  r.upper_hi = make_estimate(hi, used);
  for (auto* e : {&r.interval, &r.upper_lo, &r.upper_hi}) {
    e->t = t;
    e->sigma0 = model_sigma0(model);
    e->u_min = grid->u_min;
    e->excluded = excluded;
    e->model_tag = model_tag(model);
  }
  // From the counts, so that the identity is exact rather than up to rounding.
  r.identity_gap = (double(inside) - (double(lo) - double(hi))) / double(used);
  return r;
}

}  // namespace lilxing
