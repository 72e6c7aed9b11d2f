#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "lilxing/analytic.hpp"
#include "lilxing/errors.hpp"
#include "lilxing/quadrature.hpp"

using namespace lilxing;
using doctest::Approx;

namespace {

constexpr double kE = std::numbers::e;
constexpr double kInf = std::numeric_limits<double>::infinity();

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double central_diff(const auto& f, double x, double h) { return (f(x + h) - f(x - h)) / (2 * h); }

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return g;
}

// Simpson's rule of the normal density written out independently.
double phi_by_simpson(double x) {
  const int n = 20000;
  const double h = x / n;
  auto f = [](double s) { return std::exp(-0.5 * s * s) / std::sqrt(2 * std::numbers::pi); };
  double sum = f(0) + f(x);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * f(i * h);
  return 0.5 + sum * h / 3;
}

}  // namespace

TEST_SUITE("scaling function") {
  TEST_CASE("values where log log(1/u) is an integer") {
    CHECK(lil_scale(std::exp(-kE)) == Approx(std::sqrt(2 * std::exp(-kE))).epsilon(1e-14));
    CHECK(lil_scale(std::exp(-kE * kE)) == Approx(std::sqrt(4 * std::exp(-kE * kE))).epsilon(1e-14));
  }

  TEST_CASE("domain") {
    CHECK_THROWS_AS(lil_scale(0.0), DomainError);
    CHECK_THROWS_AS(lil_scale(-1e-3), DomainError);
    CHECK_THROWS_AS(lil_scale(1 / kE), DomainError);
    CHECK_THROWS_AS(lil_scale(0.5), DomainError);
    CHECK_THROWS_AS(lil_scale_deriv(0.5), DomainError);
  }

  TEST_CASE("increasing on [1e-12, 1e-3] with positive derivative") {
    const auto g = log_grid(1e-12, 1e-3, 400);
    for (std::size_t i = 1; i < g.size(); ++i) {
      CHECK(lil_scale(g[i - 1]) < lil_scale(g[i]));
      CHECK(lil_scale_deriv(g[i]) > 0);
    }
  }

  TEST_CASE("derivative against central differences") {
    for (double u : {1e-4, 1e-8}) {
      const double fd = central_diff([](double x) { return lil_scale(x); }, u, u * 1e-6);
      CHECK(rel(lil_scale_deriv(u), fd) < 1e-6);
    }
    const double u = std::exp(-kE);
    CHECK(lil_scale_deriv(u) == Approx((1 - 1 / kE) / std::sqrt(2 * std::exp(-kE))).epsilon(1e-13));
    for (double v : log_grid(1e-300, 1e-2, 200)) CHECK(lil_scale_deriv(v) > 0);
  }

  TEST_CASE("long double instantiation agrees with double") {
    CHECK(double(lil_scale(1e-6L)) == Approx(lil_scale(1e-6)).epsilon(1e-15));
  }
}

TEST_SUITE("normal distribution") {
  TEST_CASE("density values and symmetry") {
    CHECK(gaussian_density(0.0) == Approx(0.3989422804014327).epsilon(1e-15));
    CHECK(gaussian_density(1.0) == Approx(0.24197072451914337).epsilon(1e-15));
    for (double x : {0.5, 3.0, 7.0}) CHECK(gaussian_density(x) == gaussian_density(-x));
  }

  TEST_CASE("cdf symmetry and reference points") {
    CHECK(gaussian_cdf(0.0) == 0.5);
    for (double x : {0.3, 1.0, 4.0}) CHECK(gaussian_cdf(x) + gaussian_cdf(-x) == Approx(1.0).epsilon(1e-15));
    CHECK(gaussian_cdf(1.0) == Approx(0.841345).epsilon(1e-6));
  }

  TEST_CASE("cdf within 1e-12 of Simpson quadrature of the density on |x| <= 8") {
    double worst = 0;
    for (double x = -8; x <= 8.0001; x += 0.25) {
      worst = std::max(worst, std::abs(gaussian_cdf(x) - phi_by_simpson(x)));
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("survival function keeps relative accuracy in the far tail") {
    // Mills ratio: sf(x) ~ n(x)/x (1 - 1/x^2 + 3/x^4).
    const double x = 30;
    const double mills = gaussian_density(x) / x * (1 - 1 / (x * x) + 3 / std::pow(x, 4));
    CHECK(rel(gaussian_sf(x), mills) < 1e-5);
  }
}

TEST_SUITE("rate function") {
  TEST_CASE("point values") {
    CHECK(rate_function(1.7, 1.7).value == 0);
    CHECK(rate_function(0.85, 1.7).is_infinite());
    CHECK(rate_function(2.0, 1.0).value == Approx(3.0));
    CHECK_THROWS_AS(rate_function(1.0, 0.0), DomainError);
  }

  TEST_CASE("infimum over intervals") {
    const double s = 1.3;
    CHECK(rate_inf({Interval::closed(2 * s, 3 * s)}, s).value == Approx(3.0));
    CHECK(rate_inf({Interval::left_open(0, s / 2)}, s).is_infinite());
    CHECK(rate_inf({Interval::closed(0.5 * s, 1.5 * s)}, s).value == 0);
    CHECK(rate_inf({Interval::closed(-kInf, kInf)}, s).value == 0);
    CHECK(rate_inf({Interval::closed(0, 0.2), Interval::closed(2 * s, 5 * s)}, s).value == Approx(3.0));
    CHECK_THROWS_AS(rate_inf({}, s), std::invalid_argument);
    CHECK_THROWS_AS(rate_inf({Interval::open(1.0, 1.0)}, s), std::invalid_argument);
  }

  TEST_CASE("infimum matches a brute-force grid minimum") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 4.0);
    const double s = 1.3;
    for (int trial = 0; trial < 200; ++trial) {
      double lo = U(gen), hi = U(gen);
      if (lo > hi) std::swap(lo, hi);
      if (hi - lo < 1e-3) continue;
      const int n = 20001;
      double grid_min = kInf;
      for (int i = 0; i < n; ++i) {
        grid_min = std::min(grid_min, rate_function(lo + (hi - lo) * i / (n - 1), s).value);
      }
      const double exact = rate_inf({Interval::closed(lo, hi)}, s).value;
      if (std::isinf(grid_min)) {
        CHECK(std::isinf(exact));
      } else {
        // J has slope at most 2 hi / s^2 on the interval.
        CHECK(exact <= grid_min + 1e-15);
        CHECK(grid_min - exact <= 2 * hi / (s * s) * (hi - lo) / (n - 1) + 1e-12);
      }
    }
  }
}

TEST_SUITE("levels and times") {
  TEST_CASE("deviation level invariants") {
    CHECK_THROWS_AS(DeviationLevel(0.0), DomainError);
    CHECK_THROWS_AS(DeviationLevel(1.0, -1.0), DomainError);
    const DeviationLevel flat(1.0);
    CHECK(flat.q(1e-6) == Approx(std::sqrt(2.0)).epsilon(1e-15));
    const DeviationLevel pert(1.0, 1.0, [](double t) { return 1.0 / std::log(std::log(1 / t)); });
    CHECK(pert.q(std::exp(-std::exp(2.0))) == Approx(std::sqrt(2.5)).epsilon(1e-14));
    const DeviationLevel bad(0.5, 1.0, [](double) { return -2.0; });
    CHECK_THROWS_AS(bad.q(0.1), DomainError);
  }

  TEST_CASE("scaled time") {
    for (double t : {1e-3, 1e-6, 1e-12, 1e-200}) {
      const ScaledTime st(t);
      CHECK(rel(st.a, 1 / t) < 1e-12);
      CHECK(rel(st.loglog, std::log(std::log(1 / t))) < 1e-12);
    }
    CHECK_THROWS_AS(ScaledTime(std::exp(-kE) * 1.0001), DomainError);
    CHECK_NOTHROW(ScaledTime::relaxed(0.1));
    CHECK_THROWS_AS(ScaledTime::relaxed(0.5), DomainError);
    const ScaledTime deep = ScaledTime::from_loglog(6.0);
    CHECK(deep.loglog == Approx(6.0).epsilon(1e-14));
    CHECK(deep.log_a == Approx(std::exp(6.0)).epsilon(1e-14));
  }
}

TEST_SUITE("boundary") {
  TEST_CASE("a = 1 reduces to q(1) h") {
    const DeviationLevel lv(0.5, 1.0, [](double t) { return 0.25 * t; });
    const Boundary b(lv, 1.0);
    for (double u : {1e-3, 0.05, 0.3}) {
      CHECK(b.psi(u) == Approx(lv.q(1.0) * lil_scale(u)).epsilon(1e-14));
      CHECK(b.psi_prime(u) == Approx(lv.q(1.0) * lil_scale_deriv(u)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(b.psi(0.5), DomainError);
  }

  TEST_CASE("scaling identity with a perturbed level") {
    const DeviationLevel lv(0.5, 1.0, [](double t) { return 0.25 * t; });
    const Boundary one(lv, 1.0);
    for (double a : {1e3, 1e6}) {
      const Boundary b(lv, a);
      for (double u : {1e-2, 0.2, 0.9}) {
        const double rhs = std::sqrt(a) * one.psi(u / a) * lv.q(1 / a) / lv.q(1.0);
        CHECK(b.psi(u) == Approx(rhs).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("psi over root u is the normal-density argument") {
    const DeviationLevel lv(1.0);
    for (auto [a, u] : {std::pair{1e6, 0.5}, std::pair{1e12, 0.1}}) {
      const Boundary b(lv, a);
      CHECK(b.psi(u) / std::sqrt(u) ==
            Approx(lv.q(1 / a) * std::sqrt(2 * std::log(std::log(a / u)))).epsilon(1e-14));
    }
  }

  TEST_CASE("derivative against central differences") {
    const DeviationLevel lv(1.0);
    for (auto [a, u] : {std::pair{1e6, 0.3}, std::pair{1e10, 0.01}}) {
      const Boundary b(lv, a);
      const double fd = central_diff([&](double x) { return b.psi(x); }, u, u * 1e-5);
      CHECK(rel(b.psi_prime(u), fd) < 1e-6);
    }
  }

  TEST_CASE("positivity of psi, psi' and Lambda on admissible grids") {
    const DeviationLevel lv(1.0);
    for (double a : {1e2, 1e6, 1e12}) {
      const Boundary b(lv, a);
      for (double u : log_grid(1e-250, 1.0, 300)) {
        CHECK(b.psi(u) > 0);
        CHECK(b.psi_prime(u) > 0);
        CHECK(boundary_lambda(b, u) > 0);
      }
    }
  }

  TEST_CASE("Lambda: difference form against the closed form") {
    const DeviationLevel lv(2.0);
    for (double a : {1e2, 1e6, 1e12}) {
      const Boundary b(lv, a);
      for (double u : log_grid(1e-100, 1.0, 120)) {
        CHECK(rel(b.lambda(u), b.lambda_closed_form(u)) < 1e-10);
      }
    }
  }

  TEST_CASE("Lambda over q sqrt(u LL/2) is 1 + 1/(ell LL)") {
    const DeviationLevel lv(1.0);
    const Boundary b(lv, 1e6);
    for (double u : log_grid(1e-200, 1.0, 50)) {
      const double ell = std::log(1e6 / u);
      const double ll = std::log(ell);
      const double ratio = b.lambda(u) / (b.q() * std::sqrt(u * ll / 2));
      CHECK(ratio == Approx(1 + 1 / (ell * ll)).epsilon(1e-12));
      if (1e6 / u >= 1e12) {
        CHECK(ratio >= 0.9);
        CHECK(ratio <= 1.1);
      }
    }
  }
}

TEST_SUITE("Lerche density") {
  TEST_CASE("nonnegative on [1e-12, 1)") {
    const Boundary b(DeviationLevel(1.0), 1e6);
    for (double u : log_grid(1e-12, 1 - 1e-9, 500)) CHECK(lerche_density(b, u) >= 0);
    CHECK_THROWS_AS(lerche_density(b, 1.0), DomainError);
    CHECK_THROWS_AS(lerche_density(b, 0.0), DomainError);
  }

  TEST_CASE("defective mass, decreasing in a") {
    double prev = 1.0;
    for (double a : {1e3, 1e6, 1e12}) {
      const double m = lerche_mass(Boundary(DeviationLevel(1.0), a));
      CHECK(m > 0);
      CHECK(m < prev);
      prev = m;
    }
  }

  TEST_CASE("subinterval integrals add up to the mass") {
    const Boundary b(DeviationLevel(0.5), 1e4);
    const double whole = lerche_mass(b);
    const double parts = lerche_integral(b, 0.0, 1e-20).value + lerche_integral(b, 1e-20, 1e-3).value +
                         lerche_integral(b, 1e-3, 1.0).value;
    CHECK(parts == Approx(whole).epsilon(1e-7));
  }

  TEST_CASE("direct trapezoid in log u matches the quadrature to 1e-4") {
    // Route: trapezoid of u p_a(u) in log u down to u = 1e-300, then the
    // remaining tail written out in y = log log(a/u) where u underflows.
    const double t = 1e-6, eps = 1.0;
    const double a = 1 / t;
    const Boundary b(DeviationLevel(eps), a);
    const int n = 200000;
    const double lo = std::log(1e-300), hi = std::log(1.0 - 1e-12);
    const double h = (hi - lo) / n;
    double s = 0;
    for (int i = 0; i <= n; ++i) {
      const double u = std::exp(lo + i * h);
      s += (i == 0 || i == n ? 0.5 : 1.0) * u * lerche_density(b, u);
    }
    s *= h;
    const double q = std::sqrt(1 + eps);
    auto g = [q](double y) {
      const double x = std::exp(y);
      return q / std::sqrt(2 * std::numbers::pi) * (y + 1 / x) / std::sqrt(2 * y) *
             std::exp(-(q * q - 1) * y);
    };
    const double y0 = std::log(std::log(a) - std::log(1e-300)), y1 = 60.0;
    const int m = 200000;
    const double k = (y1 - y0) / m;
    double tail = 0.5 * (g(y0) + g(y1));
    for (int i = 1; i < m; ++i) tail += g(y0 + i * k);
    tail *= k;
    const double I = crossing_prob_quadrature(ScaledTime(t), DeviationLevel(eps));
    CHECK(rel(s + tail, I) < 1e-4);
  }

  TEST_CASE("reported truncation bound is below the tolerance share") {
    const auto r = crossing_prob_quadrature_report(ScaledTime(1e-6), DeviationLevel(1.0));
    CHECK(r.truncation_bound < 1e-8 * r.value);
    CHECK(r.abs_error < 1e-8 * r.value);
  }

  TEST_CASE("unreachable tolerance raises ConvergenceError with the achieved error") {
    try {
      crossing_prob_quadrature_report(ScaledTime(1e-6), DeviationLevel(1e-3));
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.achieved_rel_error() > 1e-8);
    }
  }
}

TEST_SUITE("time inversion") {
  TEST_CASE("inverted boundary values") {
    const DeviationLevel lv(1.0);
    const auto phi = invert_boundary(1e-6, lv);
    for (double v : {10.0, 1e4}) CHECK(phi(v) / v == Approx(std::sqrt(2.0) * lil_scale(1 / v)).epsilon(1e-14));
    CHECK(phi(std::exp(kE)) == Approx(std::sqrt(2 * 2.0) * std::exp(kE / 2)).epsilon(1e-13));
    CHECK_THROWS_AS(phi(kE), DomainError);
    CHECK_THROWS_AS(phi(2.0), DomainError);
    CHECK(phi.last_exit_threshold == Approx(1e6));
    CHECK_FALSE(phi.event_identity().empty());
    const auto g = log_grid(3.0, 1e300, 400);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(phi(g[i]) / std::sqrt(g[i]) > phi(g[i - 1]) / std::sqrt(g[i - 1]));
  }

  TEST_CASE("derivative against central differences") {
    const auto phi = invert_boundary(1e-6, DeviationLevel(0.5));
    const double s = 1e8;
    CHECK(rel(phi.derivative(s), central_diff(phi, s, s * 1e-6)) < 1e-6);
  }

  TEST_CASE("Strassen exponent and power law") {
    const DeviationLevel lv(1.5);
    const auto phi = invert_boundary(1e-6, lv);
    for (double s : {1e6, 1e12}) {
      CHECK(phi(s) * phi(s) / (2 * s) == Approx(2.5 * std::log(std::log(s))).epsilon(1e-13));
      const double d = strassen_density(s, lv);
      CHECK(d * std::sqrt(2 * std::numbers::pi * s) / phi.derivative(s) ==
            Approx(std::pow(std::log(s), -2.5)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(strassen_density(2.0, lv), DomainError);
  }

  TEST_CASE("Lerche density is the Strassen density after time inversion") {
    const DeviationLevel lv(1.0);
    const double a = 1e6;
    const Boundary b(lv, a);
    for (double u : log_grid(1e-9, 0.9, 40)) {
      CHECK(rel(lerche_density(b, u), strassen_density(a / u, lv) * a / (u * u)) < 1e-8);
    }
  }
}

TEST_SUITE("crossing probabilities") {
  TEST_CASE("closed-form tail integral") {
    CHECK(tail_integral_closed_form(kE, 1.0) == Approx(1.0).epsilon(1e-15));
    CHECK(tail_integral_closed_form(std::exp(kE), 2.0) == Approx(0.5 * std::exp(-2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(tail_integral_closed_form(2.0, 1.0), DomainError);
    CHECK_THROWS_AS(tail_integral_closed_form(10.0, 0.0), DomainError);
  }

  TEST_CASE("tail integral: quadrature on [a, 1e6 a] plus the remainder") {
    for (auto [a, eps] : {std::pair{10.0, 1.5}, std::pair{1e4, 0.5}}) {
      // In z = log x the integrand is z^{-(1+eps)}.
      const auto r = quad::integrate([eps](double z) { return std::pow(z, -(1 + eps)); },
                                     std::log(a), std::log(1e6 * a), 1e-13);
      const double remainder = std::pow(std::log(1e6 * a), -eps) / eps;
      CHECK(rel(r.value + remainder, tail_integral_closed_form(a, eps)) < 1e-10);
    }
  }

  TEST_CASE("asymptotic values") {
    const ScaledTime st(std::exp(-kE * kE));
    CHECK(crossing_prob_asymptotic(st, 1.0) == Approx(std::exp(-2.0)).epsilon(1e-13));
    CHECK(crossing_prob_asymptotic(st, 2.0) == Approx(std::exp(-4.0)).epsilon(1e-13));
  }

  TEST_CASE("log quadrature over log asymptotic tends to 1") {
    for (double L : {4.0, 5.0, 6.0}) {
      const ScaledTime st = ScaledTime::from_loglog(L);
      const double ratio = std::log(crossing_prob_quadrature(st, DeviationLevel(1.0))) /
                           std::log(crossing_prob_asymptotic(st, 1.0));
      CHECK(ratio >= 0.75);
      CHECK(ratio <= 1.25);
    }
  }

  TEST_CASE("slope against log log(1/t) for eps = 1") {
    std::vector<double> L = {3.0, 3.5, 4.0, 4.5, 5.0}, y;
    for (double l : L) y.push_back(std::log(crossing_prob_quadrature(ScaledTime::from_loglog(l), DeviationLevel(1.0))));
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < L.size(); ++i) { mx += L[i] / L.size(); my += y[i] / L.size(); }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < L.size(); ++i) { sxy += (L[i] - mx) * (y[i] - my); sxx += (L[i] - mx) * (L[i] - mx); }
    const double slope = sxy / sxx;
    CHECK(slope >= -1.15);
    CHECK(slope <= -0.85);
  }

  TEST_CASE("monotone in eps and in t") {
    const ScaledTime st(1e-8);
    const double p05 = crossing_prob_quadrature(st, DeviationLevel(0.5));
    const double p1 = crossing_prob_quadrature(st, DeviationLevel(1.0));
    const double p2 = crossing_prob_quadrature(st, DeviationLevel(2.0));
    CHECK(p2 < p1);
    CHECK(p1 < p05);
    double prev = 1.0;
    for (double L = 1.5; L <= 6.0; L += 0.5) {
      const double p = crossing_prob_quadrature(ScaledTime::from_loglog(L), DeviationLevel(1.0));
      CHECK(p < prev);
      prev = p;
    }
  }

  TEST_CASE("reflection tail") {
    CHECK(reflection_sup_tail(1.0, 0.0) == 1.0);
    CHECK(reflection_sup_tail(1.0, 1.0) == Approx(0.31731050786291415).epsilon(1e-13));
    CHECK(reflection_sup_tail(0.25, 1.0) == reflection_sup_tail(1.0, 2.0));
    CHECK(reflection_sup_tail(4.0, 3.0) == reflection_sup_tail(1.0, 1.5));
  }

  TEST_CASE("reflection lower bound") {
    for (double L = 4; L <= 6.5; L += 0.25) {
      const ScaledTime st = ScaledTime::from_loglog(L);
      const double exponent = -std::log(reflection_lower_bound(st, 1.0)) / L;
      CHECK(exponent >= 2.0);
      CHECK(exponent <= 2.5);
    }
    for (double t : {1e-6, 1e-10}) {
      const ScaledTime st(t);
      CHECK(reflection_lower_bound(st, 1.0) <= crossing_prob_quadrature(st, DeviationLevel(1.0)));
    }
    const ScaledTime st(1e-6);
    CHECK(reflection_lower_bound(st, 2.0) < reflection_lower_bound(st, 1.0));
    CHECK(reflection_lower_bound(st, 1.0) < reflection_lower_bound(st, 0.5));
  }
}

TEST_SUITE("Lerche hypotheses") {
  TEST_CASE("pass for alpha = 0.75") {
    for (double a : {1e2, 1e6, 1e12}) {
      const auto r = lerche_condition_check(Boundary(DeviationLevel(1.0), a, 0.75));
      CHECK(r.monotone_ratio.passed);
      CHECK(r.derivative_ratio.passed);
      CHECK(r.all_passed());
      CHECK_FALSE(r.convergence_note.empty());
    }
  }

  TEST_CASE("monotonicity fails for alpha = 0.4") {
    const auto r = lerche_condition_check(Boundary(DeviationLevel(1.0), 1e6, 0.4));
    CHECK_FALSE(r.monotone_ratio.passed);
    REQUIRE(r.monotone_ratio.first_violation.has_value());
    CHECK(*r.monotone_ratio.first_violation > 0);
    CHECK_FALSE(r.all_passed());
  }
}
