#pragma once

// Closed-form and asymptotic quantities for LIL-scaled suprema of Brownian
// motion: the scaling function h, the moving boundaries psi_a and phi,
// Lerche's first-passage density, the rate function J and the crossing
// probability integral.
//
// Everything here is a pure function of its arguments.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lilxing/errors.hpp"

namespace lilxing {

namespace detail {
template <typename Scalar>
inline const Scalar kInvE = Scalar(1) / std::numbers::e_v<Scalar>;
}

// ---------------------------------------------------------------------------
// Scalar building blocks
// ---------------------------------------------------------------------------

/// h(u) = sqrt(2 u log log(1/u)), defined for 0 < u < 1/e.
template <typename Scalar>
Scalar lil_scale(Scalar u) {
  if (!(u > 0) || !(u < detail::kInvE<Scalar>)) {
    throw DomainError("lil_scale: u must lie in (0, 1/e)");
  }
  using std::log;
  using std::sqrt;
  return sqrt(2 * u * log(log(1 / u)));
}

/// h'(u) = (log log(1/u) - 1/log(1/u)) / h(u).
template <typename Scalar>
Scalar lil_scale_deriv(Scalar u) {
  const Scalar h = lil_scale(u);
  using std::log;
  const Scalar ell = log(1 / u);
  return (log(ell) - 1 / ell) / h;
}

template <typename Scalar>
Scalar gaussian_density(Scalar x) {
  using std::exp;
  return exp(-x * x / 2) * std::numbers::inv_sqrtpi_v<Scalar> /
         std::numbers::sqrt2_v<Scalar>;
}

/// Standard normal CDF via the C library erfc, which is accurate to a few ulp
/// over the whole real line (no cancellation in the lower tail).
template <typename Scalar>
Scalar gaussian_cdf(Scalar x) {
  using std::erfc;
  return erfc(-x / std::numbers::sqrt2_v<Scalar>) / 2;
}

/// Upper tail 1 - Phi(x) without cancellation for large x.
template <typename Scalar>
Scalar gaussian_sf(Scalar x) {
  using std::erfc;
  return erfc(x / std::numbers::sqrt2_v<Scalar>) / 2;
}

/// P(sup_{0<u<=t} W_u >= level) = 2 (1 - Phi(level / sqrt(t))), reflection
/// principle.
template <typename Scalar>
Scalar reflection_sup_tail(Scalar t, Scalar level) {
  if (!(t > 0) || !(level >= 0)) {
    throw DomainError("reflection_sup_tail: need t > 0 and level >= 0");
  }
  using std::sqrt;
  return 2 * gaussian_sf(level / sqrt(t));
}

/// (1/eps) (log a)^{-eps} = int_a^inf dx / (x (log x)^{1+eps}).
template <typename Scalar>
Scalar tail_integral_closed_form(Scalar a, Scalar epsilon) {
  if (!(a > std::numbers::e_v<Scalar>)) {
    // a == e is the edge of the domain where log a = 1; allow it exactly.
    if (a != std::numbers::e_v<Scalar>) {
      throw DomainError("tail_integral_closed_form: a must be >= e");
    }
  }
  if (!(epsilon > 0)) {
    throw DomainError("tail_integral_closed_form: epsilon must be positive");
  }
  using std::log;
  using std::pow;
  return pow(log(a), -epsilon) / epsilon;
}

/// Same integral parameterised by log a, usable when a itself overflows.
template <typename Scalar>
Scalar tail_integral_closed_form_log(Scalar log_a, Scalar epsilon) {
  if (!(log_a >= 1) || !(epsilon > 0)) {
    throw DomainError("tail_integral_closed_form_log: need log a >= 1, eps > 0");
  }
  using std::pow;
  return pow(log_a, -epsilon) / epsilon;
}

// ---------------------------------------------------------------------------
// Deviation level and scaled time
// ---------------------------------------------------------------------------

/// Target level sqrt(1 + eps + d(t)) of the scaled supremum, in units of
/// sigma0. An empty perturbation means d == 0.
class DeviationLevel {
 public:
  using Perturbation = std::function<double(double)>;

  explicit DeviationLevel(double epsilon, double sigma0 = 1.0,
                          Perturbation d = {});

  double epsilon() const { return epsilon_; }
  double sigma0() const { return sigma0_; }
  bool has_perturbation() const { return static_cast<bool>(d_); }

  double perturbation(double t) const { return d_ ? d_(t) : 0.0; }
  /// eps + d(t); the effective decay exponent.
  double exponent(double t) const;
  /// q(t) = sqrt(1 + eps + d(t)).
  double q(double t) const;

 private:
  double epsilon_;
  double sigma0_;
  Perturbation d_;
};

/// A small time t with its derived a = 1/t and L = log log(1/t).
struct ScaledTime {
  double t;
  double a;
  double log_a;
  double loglog;

  /// Requires t < e^{-e}, so that L > 1.
  explicit ScaledTime(double t);
  /// Builds t = exp(-exp(L)) keeping log a exact; requires L > 1.
  static ScaledTime from_loglog(double loglog);
  /// Requires only t < 1/e.
  static ScaledTime relaxed(double t);

 private:
  ScaledTime(double t, double a, double log_a, double loglog)
      : t(t), a(a), log_a(log_a), loglog(loglog) {}
};

// ---------------------------------------------------------------------------
// Rate function
// ---------------------------------------------------------------------------

struct RateFunctionValue {
  double value;
  bool is_infinite() const { return std::isinf(value); }
};

/// J(x) = (x/sigma0)^2 - 1 for x >= sigma0, infinity below.
RateFunctionValue rate_function(double x, double sigma0);

/// Interval with independently open or closed ends; infinite ends allowed.
struct Interval {
  double lo;
  double hi;
  bool lo_open = false;
  bool hi_open = false;

  bool empty() const;
  static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval open(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval left_open(double lo, double hi) { return {lo, hi, true, false}; }
};

/// inf_{x in set} J(x). Throws on an empty set.
RateFunctionValue rate_inf(const std::vector<Interval>& set, double sigma0);

// ---------------------------------------------------------------------------
// Lerche boundary psi_a
// ---------------------------------------------------------------------------

/// psi_a(u) = q(1/a) sqrt(a) h(u/a) on 0 < u < a/e. Lerche's theorem is
/// applied on (0, t1), which needs t1 < a/e.
class Boundary {
 public:
  Boundary(DeviationLevel level, double a, double alpha = 0.75, double t1 = 1.0);

  const DeviationLevel& level() const { return level_; }
  double a() const { return a_; }
  double alpha() const { return alpha_; }
  double t1() const { return t1_; }
  double q() const { return q_; }
  bool admissible(double u) const { return u > 0 && u / a_ < detail::kInvE<double>; }

  double psi(double u) const;
  double psi_prime(double u) const;
  /// Lambda_a(u) = psi_a(u) - u psi_a'(u), evaluated as the literal
  /// difference and cross-checked against lambda_closed_form.
  double lambda(double u) const;
  /// q sqrt(u) (LL + 1/ell) / sqrt(2 LL) with ell = log(a/u), LL = log ell.
  double lambda_closed_form(double u) const;
  /// Throws DomainError naming `who` unless admissible(u).
  void require_admissible(double u, const char* who) const;

 private:
  DeviationLevel level_;
  double a_;
  double alpha_;
  double t1_;
  double q_;
};

double boundary_psi(const Boundary& b, double u);
double boundary_psi_prime(const Boundary& b, double u);
double boundary_lambda(const Boundary& b, double u);

/// Leading-order density Lambda_a(u) u^{-3/2} n(psi_a(u)/sqrt(u)) of T_a on
/// (0, t1). The (1 + o(1)) factor is not modelled.
double lerche_density(const Boundary& b, double u);

struct QuadratureReport {
  double value;
  double abs_error;       // quadrature error estimate on the finite range
  double truncation_bound;  // analytic bound on the discarded tail
  double upper_limit_log;   // log of the truncation point in x = log(a/u)
  int segments;
};

/// int_{u_lo}^{u_hi} p_a(u) du via x = log(a/u). u_lo = 0 integrates to the
/// origin with an analytically bounded truncation.
QuadratureReport lerche_integral(const Boundary& b, double u_lo, double u_hi,
                                 double rel_tol = 1e-8);

/// Total mass int_0^{t1} p_a(u) du.
double lerche_mass(const Boundary& b);

// ---------------------------------------------------------------------------
// Time inversion and Strassen's last-exit density
// ---------------------------------------------------------------------------

/// phi(v) = sqrt(1+eps) v h(1/v), the boundary seen after time inversion.
/// The small-time event {sup_{0<u<t} W_u/h(u) >= sqrt(1+eps)} equals
/// {sup{v : W_v >= phi(v)} >= 1/t}.
struct InvertedBoundary {
  double root_one_plus_eps;
  double last_exit_threshold;  // 1/t

  double operator()(double v) const;
  double derivative(double v) const;
  std::string event_identity() const;
};

InvertedBoundary invert_boundary(double t, const DeviationLevel& level);

/// phi'(s) (2 pi s)^{-1/2} exp(-phi(s)^2 / (2s)), requires s > e.
double strassen_density(double s, const DeviationLevel& level);

// ---------------------------------------------------------------------------
// Crossing probabilities
// ---------------------------------------------------------------------------

/// int_0^1 p_a(u) du with a = 1/t; Lerche's leading-order value of
/// P(sup_{0<u<t} W_u/h(u) >= q(t)).
QuadratureReport crossing_prob_quadrature_report(const ScaledTime& t,
                                                 const DeviationLevel& level,
                                                 double rel_tol = 1e-8);
double crossing_prob_quadrature(const ScaledTime& t, const DeviationLevel& level);

/// (log 1/t)^{-eps}, leading order only.
double crossing_prob_asymptotic(const ScaledTime& t, double epsilon);

/// P(sup_{0<u<t} W_u >= sqrt(1+eps) h(t)) = 2(1 - Phi(sqrt(2(1+eps) L))).
double reflection_lower_bound(const ScaledTime& t, double epsilon);

// ---------------------------------------------------------------------------
// Hypotheses of Lerche's theorem
// ---------------------------------------------------------------------------

struct ConditionCheck {
  bool passed = true;
  std::optional<double> first_violation;  // u where the check first failed
  double worst_value = 0;                 // largest violation measure seen
};

struct LercheConditionReport {
  ConditionCheck monotone_ratio;    // (ii) psi_a(u)/u^alpha nonincreasing
  ConditionCheck derivative_ratio;  // (iii) psi' ratio near 1 for s/u near 1
  std::string convergence_note;     // (i) is checked by Monte Carlo (ta_prob)
  bool all_passed() const { return monotone_ratio.passed && derivative_ratio.passed; }
};

struct LercheCheckOptions {
  double u_min = 1e-12;
  int grid_points = 2000;
  double delta = 1e-3;
  double tolerance = 1e-2;
  int ratio_points = 21;
};

LercheConditionReport lerche_condition_check(const Boundary& b,
                                             const LercheCheckOptions& opts = {});

}  // namespace lilxing
