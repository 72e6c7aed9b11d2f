#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lilxing/errors.hpp"
#include "lilxing/estimators.hpp"
#include "lilxing/sde.hpp"

using namespace lilxing;
using doctest::Approx;

namespace {

GridPtr share(TimeGrid g) { return std::make_shared<const TimeGrid>(std::move(g)); }

double loglog(double t) { return std::log(std::log(1.0 / t)); }

}  // namespace

TEST_SUITE("diffusion specs") {
  TEST_CASE("built-in families") {
    const auto c = DiffusionSpec::constant(2.0);
    CHECK(c.b(0.3, 0.1) == 0.0);
    CHECK(c.sigma(0.3, 0.1) == 2.0);
    CHECK(c.tag() == "constant");

    const auto o = DiffusionSpec::ou(1.5, 0.5);
    CHECK(o.b(2.0, 0.0) == -3.0);
    CHECK(o.sigma(2.0, 0.0) == 0.5);
    CHECK(o.tag() == "ou(1.5)");

    const auto s = DiffusionSpec::state_vol(0.1);
    CHECK(s.sigma(2.0, 0.0) == Approx(1.4));
    CHECK(s.sigma(0.0, 0.0) == s.sigma0);
    CHECK(s.tag() == "state_vol(0.1)");
  }

  TEST_CASE("sigma0 must be positive") {
    CHECK_THROWS_AS(DiffusionSpec::constant(0.0), DomainError);
    CHECK_THROWS_AS(DiffusionSpec::ou(1.0, -1.0), DomainError);
  }
}

TEST_SUITE("Euler-Maruyama") {
  TEST_CASE("constant family is sigma0 times the driving path") {
    const auto g = share(make_geometric_grid(1e-4, 30, 16));
    const auto spec = DiffusionSpec::constant(1.7);
    for (std::uint64_t i = 0; i < 50; ++i) {
      PathRng rng(SeedRecord{2, 3, i});
      const auto p = euler_maruyama(spec, g, rng);
      REQUIRE_FALSE(p.diverged);
      for (Eigen::Index k = 0; k < g->size(); ++k) {
        const double scale = 1.7 * std::sqrt(g->knots[k]);
        CHECK(std::abs(p.x[k] - 1.7 * p.driving.values[k]) <= 1e-12 * scale);
        CHECK(p.qv[k] == Approx(1.7 * 1.7 * g->knots[k]).epsilon(1e-12));
        CHECK(p.drift_int[k] == 0.0);
      }
    }
  }

  TEST_CASE("driving path matches the Brownian sampler") {
    const auto g = share(make_geometric_grid(1e-4, 10, 4));
    PathRng r1(SeedRecord{9, 9, 9}), r2(SeedRecord{9, 9, 9});
    const auto d = euler_maruyama(DiffusionSpec::ou(1.0), g, r1);
    const auto w = sample_brownian(g, r2);
    for (Eigen::Index k = 0; k < g->size(); ++k) {
      CHECK(std::abs(d.driving.values[k] - w.values[k]) <= 1e-12 * std::sqrt(g->knots[k]));
    }
  }

  TEST_CASE("quadratic variation is nondecreasing") {
    const auto g = share(make_geometric_grid(1e-3, 20, 8));
    for (const auto& spec : {DiffusionSpec::ou(2.0), DiffusionSpec::state_vol(0.5, 0.8)}) {
      for (std::uint64_t i = 0; i < 100; ++i) {
        PathRng rng(SeedRecord{4, 1, i});
        const auto p = euler_maruyama(spec, g, rng);
        CHECK(p.qv[0] >= 0);
        for (Eigen::Index k = 1; k < g->size(); ++k) CHECK(p.qv[k] >= p.qv[k - 1]);
      }
    }
  }

  TEST_CASE("OU moments at t = 0.5 over 1e5 paths") {
    // Exact: mean 0, variance sigma0^2 (1 - e^{-2 theta t}) / (2 theta).
    const auto g = share(geometric_grid(0.5, 20, 16));
    const auto spec = DiffusionSpec::ou(1.0);
    const int n = 100000;
    double s = 0, s2 = 0;
    DiffusionPath p;
    for (int i = 0; i < n; ++i) {
      PathRng rng(SeedRecord{4, 4, std::uint64_t(i)});
      euler_maruyama_into(spec, g, rng, p);
      const double x = p.x[g->size() - 1];
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 3 * std::sqrt(var / n));
    CHECK(var == Approx((1 - std::exp(-1.0)) / 2).epsilon(0.05));
  }

  TEST_CASE("halving the step leaves the OU crossing probability unchanged within 2 SE") {
    McOptions coarse;
    coarse.n = 100000;
    coarse.seed = 31;
    coarse.grid = {40, 8};
    McOptions fine = coarse;
    fine.grid = {40, 16};
    const Model m{DiffusionSpec::ou(1.0)};
    const auto a = mc_crossing_prob(m, 1e-4, DeviationLevel(1.0), coarse);
    const auto b = mc_crossing_prob(m, 1e-4, DeviationLevel(1.0), fine);
    CHECK(std::abs(a.p_hat - b.p_hat) < 2 * std::hypot(a.std_err, b.std_err));
  }

  TEST_CASE("divergence guard") {
    const auto g = share(geometric_grid(1e-2, 10, 4));
    const auto spec = DiffusionSpec::custom([](double x, double) { return 1e8 * x; },
                                            [](double, double) { return 1.0; }, 1.0);
    PathRng rng(SeedRecord{1, 2, 3});
    DiffusionPath p;
    CHECK_FALSE(euler_maruyama_into(spec, g, rng, p));
    CHECK(p.diverged);
    CHECK(drift_bound_check(p, 0.0, 1.0));
  }
}

TEST_SUITE("drift functional") {
  TEST_CASE("zero drift gives zero") {
    const auto g = share(make_geometric_grid(1e-4, 20, 8));
    PathRng rng(SeedRecord{1, 1, 1});
    const auto p = euler_maruyama(DiffusionSpec::constant(), g, rng);
    CHECK(drift_functional(p) == 0.0);
    CHECK(drift_bound_check(p, 0.0, 1.0));
  }

  TEST_CASE("OU pathwise bound theta sup|X| sqrt(t / (2 log log(1/t)))") {
    const double t = 1e-4, theta = 3.0;
    const auto g = share(make_geometric_grid(t, 30, 8));
    const auto spec = DiffusionSpec::ou(theta);
    for (std::uint64_t i = 0; i < 2000; ++i) {
      PathRng rng(SeedRecord{6, 6, i});
      const auto p = euler_maruyama(spec, g, rng);
      const double sup_abs = p.x.cwiseAbs().maxCoeff();
      const double d = drift_functional(p);
      CHECK(d > 0);
      CHECK(d <= theta * sup_abs * std::sqrt(t / (2 * loglog(t))) * (1 + 1e-12));
      // D_t is the running maximum of the scaled drift integral at the last knot.
      const Eigen::VectorXd h = lil_scale_at_knots(*g);
      double running = 0;
      for (Eigen::Index k = 0; k < g->size(); ++k) running = std::max(running, std::abs(p.drift_int[k]) / h[k]);
      CHECK(running == d);
    }
  }

  TEST_CASE("drift bound check: honest constant passes, halved constant is caught") {
    const double t = 1e-4, theta = 1.0, c1 = 1.0;
    const auto g = share(make_geometric_grid(t, 40, 8));
    const auto spec = DiffusionSpec::ou(theta);
    int violations_true = 0, violations_half = 0;
    DiffusionPath p;
    for (std::uint64_t i = 0; i < 5000; ++i) {
      PathRng rng(SeedRecord{8, 2, i});
      euler_maruyama_into(spec, g, rng, p);
      violations_true += !drift_bound_check(p, theta * c1, c1);
      // Half the pathwise bound theta sup|X|.
      violations_half += !drift_bound_check(p, 0.5 * theta * p.x.cwiseAbs().maxCoeff(), c1);
    }
    CHECK(violations_true == 0);
    CHECK(violations_half > 0);
  }
}

TEST_SUITE("quadratic variation") {
  TEST_CASE("modulus closed forms") {
    CHECK(qv_modulus(DiffusionSpec::constant(), 1e-3, 1.0) == 0.0);
    CHECK(qv_modulus(DiffusionSpec::ou(1.0), 1e-3, 1.0) == 0.0);
    CHECK(qv_modulus(DiffusionSpec::state_vol(0.1), 1e-4, 1.0) == Approx(0.21).epsilon(1e-14));
    CHECK(qv_modulus(DiffusionSpec::state_vol(0.1, 2.0), 1e-4, 1.0) == Approx(0.84).epsilon(1e-14));
    CHECK_THROWS_AS(qv_modulus(DiffusionSpec::constant(), 0.0, 1.0), DomainError);
  }

  TEST_CASE("grid maximisation for a custom spec agrees with the closed form within 1%") {
    const auto sv = DiffusionSpec::state_vol(0.1);
    const auto custom = DiffusionSpec::custom([](double, double) { return 0.0; },
                                              [](double x, double) { return 1.0 + 0.1 * x * x; }, 1.0);
    const double grid = qv_modulus(custom, 1e-4, 1.0);
    CHECK(grid == Approx(qv_modulus(sv, 1e-4, 1.0)).epsilon(0.01));
    CHECK(grid <= qv_modulus(sv, 1e-4, 1.0) * (1 + 1e-12));
  }

  TEST_CASE("constant family has zero deviation") {
    const auto g = share(make_geometric_grid(1e-4, 20, 8));
    const auto spec = DiffusionSpec::constant(1.3);
    PathRng rng(SeedRecord{3, 3, 3});
    const auto p = euler_maruyama(spec, g, rng);
    const auto c = qv_deviation_check(p, spec, 1.0);
    CHECK(c.passed);
    CHECK(c.worst_excess == 0.0);
    for (Eigen::Index k = 0; k < g->size(); ++k) CHECK(std::abs(p.qv[k] - 1.69 * g->knots[k]) <= 1e-12 * g->knots[k]);
  }

  TEST_CASE("state_vol(0.1) passes on every path; a wrong sigma0 is caught") {
    const auto g = share(make_geometric_grid(1e-4, 40, 8));
    const auto spec = DiffusionSpec::state_vol(0.1);
    const auto wrong = DiffusionSpec::state_vol(0.1, 1.5);
    int fails = 0, caught = 0;
    DiffusionPath p;
    for (std::uint64_t i = 0; i < 5000; ++i) {
      PathRng rng(SeedRecord{12, 1, i});
      euler_maruyama_into(spec, g, rng, p);
      const auto ok = qv_deviation_check(p, spec, 1.0);
      fails += !ok.passed;
      CHECK(ok.slack >= 0);
      const auto bad = qv_deviation_check(p, wrong, 1.0);
      if (!bad.passed) {
        ++caught;
        CHECK(bad.first_violation.has_value());
        CHECK(bad.worst_excess > 0);
      }
    }
    CHECK(fails == 0);
    CHECK(caught == 5000);
  }
}

TEST_SUITE("r bound") {
  TEST_CASE("zero modulus gives zero") {
    CHECK(r_bound(1e-4, DiffusionSpec::constant(), 1.0) == 0.0);
    CHECK(r_bound(1e-4, DiffusionSpec::ou(2.0), 1.0) == 0.0);
  }

  TEST_CASE("state_vol closed form and decrease in t") {
    // g is u-independent, so the sup sits at u = t.
    const auto spec = DiffusionSpec::state_vol(0.1);
    const double g = 0.21;
    double prev = INFINITY;
    for (double t : {1e-2, 1e-4, 1e-6}) {
      const double r = r_bound(t, spec, 1.0);
      CHECK(r == Approx(std::sqrt(3 * g * std::log(1 / g) / (2 * loglog(t)))).epsilon(1e-12));
      CHECK(r < prev);
      prev = r;
    }
    CHECK(r_bound(1e-6, DiffusionSpec::state_vol(1e-3), 1.0) < 0.1);
  }

  TEST_CASE("modulus too large is a domain error") {
    // (1.2)^2 - 1 = 0.44 > 1/e.
    CHECK_THROWS_AS(r_bound(1e-4, DiffusionSpec::state_vol(0.2), 1.0), DomainError);
    CHECK_THROWS_AS(r_bound(0.5, DiffusionSpec::constant(), 1.0), DomainError);
  }
}

TEST_SUITE("DDS equivalence") {
  TEST_CASE("constant family against sigma0 W") {
    DdsOptions o;
    o.seed = 5;
    const auto r = dds_equivalence_check(DiffusionSpec::constant(2.0), 1e-4, 10000, o);
    CHECK(r.passed);
    CHECK(r.statistic <= r.threshold);
    CHECK(r.p_value > 0.01);
  }

  TEST_CASE("KS statistic grows with beta") {
    // Pilot at t = 0.05, n = 1e4: 0.0059 for beta = 1e-3, 0.0117 for beta = 1.
    DdsOptions o;
    o.seed = 11;
    const auto small = dds_equivalence_check(DiffusionSpec::state_vol(1e-3), 0.05, 10000, o);
    const auto large = dds_equivalence_check(DiffusionSpec::state_vol(1.0), 0.05, 10000, o);
    CHECK(small.statistic < large.statistic);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(dds_equivalence_check(DiffusionSpec::constant(), 1e-4, 0), std::invalid_argument);
    CHECK_THROWS_AS(dds_equivalence_check(DiffusionSpec::ou(1.0), 1e-4, 100), std::invalid_argument);
  }
}

TEST_SUITE("weak large deviations") {
  TEST_CASE("OU hit probability decreases with t") {
    WeakLdOptions o;
    o.seed = 14;
    const auto r = weak_ld_check(DiffusionSpec::ou(1.0), 1.0, {0.5, 0.25, 0.1}, 100000, o);
    REQUIRE(r.points.size() == 3);
    CHECK(r.points[0].p_hat > r.points[1].p_hat);
    CHECK(r.points[1].p_hat > r.points[2].p_hat);
    CHECK(r.zero_hit_count == 0);
    REQUIRE(r.fitted_power.has_value());
    CHECK(*r.fitted_power > 0);
  }

  TEST_CASE("constant family lies in the reflection sandwich") {
    // P(sup W >= c) <= P(sup |W| >= c) <= 2 P(sup W >= c), sup W >= c having
    // probability 2(1 - Phi(c / sqrt t)).
    const double t = 1e-4, sigma0 = 1.0, c1 = 3 * sigma0 * std::sqrt(t);
    WeakLdOptions o;
    o.seed = 15;
    const auto r = weak_ld_check(DiffusionSpec::constant(sigma0), c1, {t}, 100000, o);
    const auto& pt = r.points[0];
    const double one_sided = 2 * gaussian_sf(3.0);
    CHECK(pt.p_hat >= one_sided - 3 * pt.std_err);
    CHECK(pt.p_hat <= 2 * one_sided + 3 * pt.std_err);
    // Overlap of the two one-sided events is negligible at 3 sigma.
    CHECK(std::abs(pt.p_hat - 2 * one_sided) < 3 * pt.std_err);
  }

  TEST_CASE("zero-hit reporting") {
    const auto r = weak_ld_check(DiffusionSpec::ou(1.0), 1.0, {1e-8, 1e-9}, 1000);
    CHECK(r.zero_hit_count == 2);
    CHECK_FALSE(r.fitted_power.has_value());
    CHECK(r.message.find("zero hits") != std::string::npos);
  }

  TEST_CASE("input errors") {
    CHECK_THROWS_AS(weak_ld_check(DiffusionSpec::ou(1.0), 1.0, {}, 10), std::invalid_argument);
    CHECK_THROWS_AS(weak_ld_check(DiffusionSpec::ou(1.0), 1.0, {0.1, 0.2}, 10), std::invalid_argument);
    CHECK_THROWS_AS(weak_ld_check(DiffusionSpec::ou(1.0), 1.0, {0.1}, 0), std::invalid_argument);
  }
}
