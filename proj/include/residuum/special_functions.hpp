// Scalar special functions backing the distribution CDFs and the normal
// quantile transform: log-gamma, digamma, regularized incomplete gamma and
// beta, and the standard normal CDF/quantile pair.
//
// All functions are pure, deterministic, and safe to call concurrently.
// Accuracy targets: incomplete gamma/beta to ~1e-13 absolute, normal CDF to
// machine precision, normal quantile well below 1e-9 absolute.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace residuum {

// Raised when an internal numeric consistency check fails (as opposed to a
// caller error, which raises std::domain_error / std::invalid_argument).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("log_gamma: requires x > 0, got " + std::to_string(x));
  return std::lgamma(x);
}

// Digamma psi(x) for x > 0: recurrence up to x >= 10, then the asymptotic
// series in 1/x^2 (error < 1e-13 at the switch point).
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("digamma: requires x > 0, got " + std::to_string(x));
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv
          - inv2 * (1.0 / 12.0
          - inv2 * (1.0 / 120.0
          - inv2 * (1.0 / 252.0
          - inv2 * (1.0 / 240.0
          - inv2 * (1.0 / 132.0)))));
  return result;
}

namespace detail {

inline constexpr int kSeriesMaxIter = 2000;
inline constexpr double kSeriesEps = 1e-16;
inline constexpr double kLentzTiny = 1e-300;

// Lower regularized incomplete gamma P(a,x) by power series; valid x < a+1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kSeriesMaxIter; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kSeriesEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a,x) by Lentz continued fraction;
// valid x >= a+1.
inline double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kLentzTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kSeriesMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kLentzTiny) d = kLentzTiny;
    c = b + an / c;
    if (std::abs(c) < kLentzTiny) c = kLentzTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kSeriesEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the regularized incomplete beta (Lentz).
inline double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kLentzTiny) d = kLentzTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kSeriesMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kLentzTiny) d = kLentzTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kLentzTiny) c = kLentzTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kLentzTiny) d = kLentzTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kLentzTiny) c = kLentzTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kSeriesEps) break;
  }
  return h;
}

}  // namespace detail

// Lower regularized incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
// Series and continued-fraction regimes switch at the standard x = a+1.
inline double reg_lower_inc_gamma(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw std::domain_error("reg_lower_inc_gamma: requires a > 0");
  if (!(x >= 0.0) || !std::isfinite(x))
    throw std::domain_error("reg_lower_inc_gamma: requires x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Upper regularized incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
inline double reg_upper_inc_gamma(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw std::domain_error("reg_upper_inc_gamma: requires a > 0");
  if (!(x >= 0.0) || !std::isfinite(x))
    throw std::domain_error("reg_upper_inc_gamma: requires x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Regularized incomplete beta I_x(a,b), with the continued fraction applied
// on whichever side of x = (a+1)/(a+b+2) converges fast.
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("reg_inc_beta: requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("reg_inc_beta: requires x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
                         + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Standard normal CDF via erfc; full relative accuracy in the lower tail.
inline double std_normal_cdf(double z) {
  if (std::isnan(z)) throw std::domain_error("std_normal_cdf: NaN input");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace detail {

// Rational approximation to the normal quantile (Acklam), |rel err| < 1.2e-9.
inline double normal_quantile_estimate(double u) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // central region (u <= 0.5 by the caller's reduction)
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

// Standard normal quantile Phi^{-1}(u) for u in (0,1), strict.  Rational
// estimate refined by one Newton step against std_normal_cdf; the argument
// is reduced to the lower tail first (1-u is exact there), so the refined
// absolute error stays near machine precision everywhere.
inline double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("std_normal_quantile: requires u in (0,1), got " +
                            std::to_string(u));
  if (u == 0.5) return 0.0;
  if (u > 0.5) return -std_normal_quantile(1.0 - u);
  double z = detail::normal_quantile_estimate(u);
  const double pdf = std_normal_pdf(z);
  if (pdf > 1e-310) z -= (std_normal_cdf(z) - u) / pdf;
  return z;
}

}  // namespace residuum
