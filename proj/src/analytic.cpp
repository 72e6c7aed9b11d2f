#include "lilxing/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lilxing/quadrature.hpp"

namespace lilxing {

namespace {

constexpr double kInvSqrt2Pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;
const double kMaxLogLog = std::log(708.0);  // keeps t = exp(-exp(L)) normal

}  // namespace

// ---------------------------------------------------------------------------
// DeviationLevel / ScaledTime
// ---------------------------------------------------------------------------

DeviationLevel::DeviationLevel(double epsilon, double sigma0, Perturbation d)
    : epsilon_(epsilon), sigma0_(sigma0), d_(std::move(d)) {
  if (!(epsilon > 0)) throw DomainError("DeviationLevel: epsilon must be positive");
  if (!(sigma0 > 0)) throw DomainError("DeviationLevel: sigma0 must be positive");
}

double DeviationLevel::exponent(double t) const {
  const double e = epsilon_ + perturbation(t);
  if (!(1.0 + e > 0)) {
    throw DomainError("DeviationLevel: 1 + eps + d(t) must be positive");
  }
  return e;
}

double DeviationLevel::q(double t) const { return std::sqrt(1.0 + exponent(t)); }

ScaledTime::ScaledTime(double t_) {
  if (!(t_ > 0) || !(t_ < std::exp(-std::numbers::e))) {
    throw DomainError("ScaledTime: t must lie in (0, e^-e)");
  }
  t = t_;
  a = 1.0 / t_;
  log_a = -std::log(t_);
  loglog = std::log(log_a);
}

ScaledTime ScaledTime::from_loglog(double loglog) {
  if (!(loglog > 1) || !(loglog <= kMaxLogLog)) {
    throw DomainError("ScaledTime::from_loglog: need 1 < L <= log 708");
  }
  const double log_a = std::exp(loglog);
  return ScaledTime(std::exp(-log_a), std::exp(log_a), log_a, loglog);
}

ScaledTime ScaledTime::relaxed(double t) {
  if (!(t > 0) || !(t < detail::kInvE<double>)) {
    throw DomainError("ScaledTime::relaxed: t must lie in (0, 1/e)");
  }
  const double log_a = -std::log(t);
  return ScaledTime(t, 1.0 / t, log_a, std::log(log_a));
}

// ---------------------------------------------------------------------------
// Rate function
// ---------------------------------------------------------------------------

RateFunctionValue rate_function(double x, double sigma0) {
  if (!(sigma0 > 0)) throw DomainError("rate_function: sigma0 must be positive");
  if (x < sigma0) return {std::numeric_limits<double>::infinity()};
  const double r = x / sigma0;
  return {r * r - 1.0};
}

bool Interval::empty() const {
  if (std::isnan(lo) || std::isnan(hi)) return true;
  if (lo > hi) return true;
  return lo == hi && (lo_open || hi_open);
}

RateFunctionValue rate_inf(const std::vector<Interval>& set, double sigma0) {
  if (!(sigma0 > 0)) throw DomainError("rate_inf: sigma0 must be positive");
  bool any = false;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& iv : set) {
    if (iv.empty()) continue;
    any = true;
    // J is infinite below sigma0 and increasing above it, so the infimum sits
    // at max(lo, sigma0) provided the interval reaches sigma0.
    if (iv.hi < sigma0 || (iv.hi == sigma0 && iv.hi_open)) continue;
    best = std::min(best, rate_function(std::max(iv.lo, sigma0), sigma0).value);
  }
  if (!any) throw std::invalid_argument("rate_inf: empty set");
  return {best};
}

// ---------------------------------------------------------------------------
// Boundary
// ---------------------------------------------------------------------------

Boundary::Boundary(DeviationLevel level, double a, double alpha, double t1)
    : level_(std::move(level)), a_(a), alpha_(alpha), t1_(t1) {
  if (!(a > 0)) throw DomainError("Boundary: a must be positive");
  if (!(alpha > 0 && alpha < 1)) throw DomainError("Boundary: alpha must lie in (0, 1)");
  if (!(t1 > 0)) throw DomainError("Boundary: t1 must be positive");
  q_ = level_.q(1.0 / a);
}

void Boundary::require_admissible(double u, const char* who) const {
  if (!admissible(u)) {
    throw DomainError(std::string(who) + ": need 0 < u/a < 1/e");
  }
}

double Boundary::psi(double u) const {
  require_admissible(u, "boundary_psi");
  return q_ * std::sqrt(a_) * lil_scale(u / a_);
}

double Boundary::psi_prime(double u) const {
  require_admissible(u, "boundary_psi_prime");
  return q_ * lil_scale_deriv(u / a_) / std::sqrt(a_);
}

double Boundary::lambda_closed_form(double u) const {
  require_admissible(u, "boundary_lambda");
  const double ell = std::log(a_ / u);
  const double ll = std::log(ell);
  return q_ * std::sqrt(u) * (ll + 1.0 / ell) / std::sqrt(2.0 * ll);
}

double Boundary::lambda(double u) const {
  const double diff = psi(u) - u * psi_prime(u);
  const double closed = lambda_closed_form(u);
  if (std::abs(diff - closed) > 1e-10 * std::abs(closed)) {
    std::ostringstream msg;
    msg << "boundary_lambda: difference " << diff << " and closed form " << closed
        << " disagree at u=" << u;
    throw std::logic_error(msg.str());
  }
  return diff;
}

double boundary_psi(const Boundary& b, double u) { return b.psi(u); }
double boundary_psi_prime(const Boundary& b, double u) { return b.psi_prime(u); }
double boundary_lambda(const Boundary& b, double u) { return b.lambda(u); }

double lerche_density(const Boundary& b, double u) {
  if (!(u > 0 && u < b.t1())) throw DomainError("lerche_density: u must lie in (0, t1)");
  const double root_u = std::sqrt(u);
  // Ordered so that u^{-3/2} never overflows on its own.
  return (b.lambda(u) / root_u) * gaussian_density(b.psi(u) / root_u) / u;
}

// ---------------------------------------------------------------------------
// Crossing integral
// ---------------------------------------------------------------------------

namespace {

// With x = log(a/u) and then y = log x the density mass element becomes
//   p_a(u) du = q n0 (y + e^{-y}) / sqrt(2y) e^{-(q^2-1) y} dy,
// smooth on y > 0 with exponential decay.
struct LogTimeIntegrand {
  double q;
  double decay;  // q^2 - 1

  double operator()(double y) const {
    return q * kInvSqrt2Pi * (y + std::exp(-y)) / std::sqrt(2.0 * y) *
           std::exp(-decay * y);
  }
};

// Bound on int_{x >= X} of the x-integrand, X = e^Y, using
// (log x + 1/x)/sqrt(2 log x) <= (1 + 1/(X log X)) sqrt(log x / 2) and the
// monotone decrease of sqrt(log x) x^{-k/2} once log x >= 1/k.
double truncation_bound(double q, double decay, double Y) {
  const double half = decay / 2.0;
  const double X = std::exp(Y);
  const double envelope =
      q * kInvSqrt2Pi * (1.0 + 1.0 / (X * Y)) * std::sqrt(Y / 2.0) * std::exp(-half * Y);
  return envelope * tail_integral_closed_form_log(X, half);
}

QuadratureReport integrate_log_time(double q, double ell_lo,
                                    std::optional<double> ell_hi, double rel_tol) {
  if (!(ell_lo > 1.0)) throw DomainError("lerche_integral: need log(a/u_hi) > 1");
  const LogTimeIntegrand g{q, q * q - 1.0};
  const double y_lo = std::log(ell_lo);

  if (ell_hi) {
    const double y_hi = std::log(*ell_hi);
    if (!(y_hi >= y_lo)) throw DomainError("lerche_integral: empty range");
    const auto r = quad::integrate<double>(g, y_lo, y_hi, rel_tol);
    if (!r.converged) {
      throw ConvergenceError("lerche_integral: tolerance not met",
                             r.abs_error / std::abs(r.value));
    }
    return {r.value, r.abs_error, 0.0, y_hi, r.intervals};
  }

  if (!(g.decay > 0)) {
    throw DomainError("lerche_integral: eps + d must be positive for u_lo = 0");
  }
  constexpr double kMaxY = 700.0;  // exp(Y) must stay finite
  if (!(y_lo < kMaxY)) throw DomainError("lerche_integral: log log(a/u_hi) too large");
  double Y = std::min(kMaxY, std::max(y_lo, 1.0 / g.decay) + 1.0);
  for (;;) {
    const auto r = quad::integrate<double>(g, y_lo, Y, rel_tol);
    if (!r.converged) {
      throw ConvergenceError("lerche_integral: tolerance not met",
                             r.abs_error / std::abs(r.value));
    }
    const double tail = truncation_bound(q, g.decay, Y);
    if (tail < rel_tol * r.value) {
      return {r.value, r.abs_error, tail, Y, r.intervals};
    }
    if (Y >= kMaxY) {
      throw ConvergenceError("lerche_integral: truncation bound not met",
                             tail / r.value);
    }
    Y = std::min(kMaxY, y_lo + 2.0 * (Y - y_lo));
  }
}

}  // namespace

QuadratureReport lerche_integral(const Boundary& b, double u_lo, double u_hi,
                                 double rel_tol) {
  if (!(u_lo >= 0) || !(u_hi > u_lo)) {
    throw DomainError("lerche_integral: need 0 <= u_lo < u_hi");
  }
  if (u_hi > b.t1()) throw DomainError("lerche_integral: u_hi beyond t1");
  b.require_admissible(u_hi, "lerche_integral");
  const double log_a = std::log(b.a());
  const double ell_lo = log_a - std::log(u_hi);
  std::optional<double> ell_hi;
  if (u_lo > 0) ell_hi = log_a - std::log(u_lo);
  return integrate_log_time(b.q(), ell_lo, ell_hi, rel_tol);
}

double lerche_mass(const Boundary& b) { return lerche_integral(b, 0.0, b.t1()).value; }

QuadratureReport crossing_prob_quadrature_report(const ScaledTime& t,
                                                 const DeviationLevel& level,
                                                 double rel_tol) {
  return integrate_log_time(level.q(t.t), t.log_a, std::nullopt, rel_tol);
}

double crossing_prob_quadrature(const ScaledTime& t, const DeviationLevel& level) {
  return crossing_prob_quadrature_report(t, level).value;
}

double crossing_prob_asymptotic(const ScaledTime& t, double epsilon) {
  if (!(epsilon > 0)) throw DomainError("crossing_prob_asymptotic: epsilon must be positive");
  return std::exp(-epsilon * t.loglog);
}

double reflection_lower_bound(const ScaledTime& t, double epsilon) {
  if (!(epsilon > 0)) throw DomainError("reflection_lower_bound: epsilon must be positive");
  return 2.0 * gaussian_sf(std::sqrt(2.0 * (1.0 + epsilon) * t.loglog));
}

// ---------------------------------------------------------------------------
// Time inversion
// ---------------------------------------------------------------------------

double InvertedBoundary::operator()(double v) const {
  if (!(v > std::numbers::e)) throw DomainError("invert_boundary: phi(v) needs v > e");
  return root_one_plus_eps * v * lil_scale(1.0 / v);
}

double InvertedBoundary::derivative(double v) const {
  if (!(v > std::numbers::e)) throw DomainError("invert_boundary: phi(v) needs v > e");
  // phi = c sqrt(2 v log log v)
  const double lv = std::log(v);
  const double ll = std::log(lv);
  return root_one_plus_eps * (ll + 1.0 / lv) / std::sqrt(2.0 * v * ll);
}

std::string InvertedBoundary::event_identity() const {
  std::ostringstream s;
  s << "{sup_{0<u<t} W_u/h(u) >= " << root_one_plus_eps
    << "} = {sup{v : W_v >= phi(v)} >= " << last_exit_threshold << "}";
  return s.str();
}

InvertedBoundary invert_boundary(double t, const DeviationLevel& level) {
  if (!(t > 0)) throw DomainError("invert_boundary: t must be positive");
  return {std::sqrt(1.0 + level.epsilon()), 1.0 / t};
}

double strassen_density(double s, const DeviationLevel& level) {
  if (!(s > std::numbers::e)) throw DomainError("strassen_density: need s > e");
  const InvertedBoundary phi{std::sqrt(1.0 + level.epsilon()), 0.0};
  const double p = phi(s);
  return phi.derivative(s) / std::sqrt(2.0 * std::numbers::pi * s) *
         std::exp(-p * p / (2.0 * s));
}

// ---------------------------------------------------------------------------
// Lerche hypotheses
// ---------------------------------------------------------------------------

LercheConditionReport lerche_condition_check(const Boundary& b,
                                             const LercheCheckOptions& opts) {
  LercheConditionReport report;
  const double u_max = std::min(b.t1(), b.a() * detail::kInvE<double> * (1.0 - 1e-9));
  if (!(opts.u_min > 0 && opts.u_min < u_max) || opts.grid_points < 2) {
    throw DomainError("lerche_condition_check: invalid grid");
  }
  const double log_lo = std::log(opts.u_min);
  const double step = (std::log(u_max) - log_lo) / (opts.grid_points - 1);
  auto knot = [&](int k) {
    return k == opts.grid_points - 1 ? u_max : std::exp(log_lo + step * k);
  };

  // (ii) psi_a(u) / u^alpha nonincreasing.
  double prev = b.psi(knot(0)) / std::pow(knot(0), b.alpha());
  for (int k = 1; k < opts.grid_points; ++k) {
    const double u = knot(k);
    const double cur = b.psi(u) / std::pow(u, b.alpha());
    const double rise = cur / prev - 1.0;
    if (rise > 1e-12) {
      auto& c = report.monotone_ratio;
      if (c.passed) c.first_violation = u;
      c.passed = false;
      c.worst_value = std::max(c.worst_value, rise);
    }
    prev = cur;
  }

  // (iii) |psi'(s)/psi'(u) - 1| < tol whenever |s/u - 1| <= delta.
  const int half = opts.ratio_points / 2;
  for (int k = 0; k < opts.grid_points; k += 10) {
    const double u = knot(k);
    const double du = b.psi_prime(u);
    for (int j = -half; j <= half; ++j) {
      const double s = u * (1.0 + opts.delta * j / std::max(half, 1));
      if (!(s > 0 && s < b.t1() && b.admissible(s))) continue;
      const double dev = std::abs(b.psi_prime(s) / du - 1.0);
      auto& c = report.derivative_ratio;
      c.worst_value = std::max(c.worst_value, dev);
      if (!(dev < opts.tolerance)) {
        if (c.passed) c.first_violation = u;
        c.passed = false;
      }
    }
  }

  report.convergence_note =
      "condition (i) P(T_a < t1) -> 0 is estimated by Monte Carlo via ta_prob";
  return report;
}

}  // namespace lilxing
