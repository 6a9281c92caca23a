// Goodness-of-fit layer: Shapiro-Wilk normality test (Royston's 1995
// algorithm, n in [3, 5000]), one-sample Kolmogorov-Smirnov test against
// Uniform(0,1), the replicated Shapiro-Wilk procedure that integrates out
// the randomization in the predictive p-values, and normal QQ support.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "residuum/residuals.hpp"
#include "residuum/rng.hpp"
#include "residuum/special_functions.hpp"

namespace residuum {

struct GofResult {
  double statistic = 0.0;
  double p_value = 0.0;
  int n = 0;
  const char* method = "";
};

namespace detail {

// c[0] + c[1] x + c[2] x^2 + ...
inline double polyval(const double* c, int n, double x) {
  double r = 0.0;
  for (int i = n - 1; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace detail

// Shapiro-Wilk W and its p-value.  Requires 3 <= n <= 5000 and a
// non-constant sample.  The null hypothesis is that the sample is normal
// (any mean and variance); small p-values indicate non-normality.
inline GofResult shapiro_wilk(std::vector<double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 3 || n > 5000)
    throw std::invalid_argument("shapiro_wilk: sample size must be in [3, 5000], got " +
                                std::to_string(n));
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("shapiro_wilk: non-finite value in sample");
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ssq = 0.0;
  for (double v : x) ssq += (v - mean) * (v - mean);
  if (!(ssq > 0.0))
    throw std::invalid_argument("shapiro_wilk: sample is constant");

  // expected normal order statistics via the Blom-type approximation
  std::vector<double> m(n);
  double summ2 = 0.0;
  for (int i = 0; i < n; ++i) {
    m[i] = std_normal_quantile((i + 1 - 0.375) / (n + 0.25));
    summ2 += m[i] * m[i];
  }

  std::vector<double> a(n);
  if (n == 3) {
    a[0] = -std::numbers::sqrt2 / 2.0;
    a[1] = 0.0;
    a[2] = -a[0];
  } else {
    static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    const double an = detail::polyval(c1, 6, rsn) + m[n - 1] / std::sqrt(summ2);
    if (n > 5) {
      const double an1 = detail::polyval(c2, 6, rsn) + m[n - 2] / std::sqrt(summ2);
      const double phi = (summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                         (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
      a[n - 1] = an;
      a[n - 2] = an1;
      a[0] = -an;
      a[1] = -an1;
      const double root_phi = std::sqrt(phi);
      for (int i = 2; i < n - 2; ++i) a[i] = m[i] / root_phi;
    } else {
      const double phi = (summ2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
      a[n - 1] = an;
      a[0] = -an;
      const double root_phi = std::sqrt(phi);
      for (int i = 1; i < n - 1; ++i) a[i] = m[i] / root_phi;
    }
  }

  double num = 0.0;
  for (int i = 0; i < n; ++i) num += a[i] * x[i];
  double w = num * num / ssq;
  if (w > 1.0) w = 1.0;

  GofResult r;
  r.statistic = w;
  r.n = n;
  r.method = "shapiro-wilk";
  if (n == 3) {
    // exact distribution of W for n = 3
    const double p = (6.0 / std::numbers::pi) *
                     (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75)));
    r.p_value = std::clamp(p, 0.0, 1.0);
    return r;
  }
  const double log1mw = std::log1p(-w);
  double zval;
  if (n <= 11) {
    const double g = -2.273 + 0.459 * n;
    if (log1mw >= g) {
      r.p_value = 1e-19;
      return r;
    }
    const double y = -std::log(g - log1mw);
    const double mu = 0.5440 - 0.39978 * n + 0.025054 * n * n - 0.0006714 * n * n * n;
    const double sigma = std::exp(1.3822 - 0.77857 * n + 0.062767 * n * n - 0.0020322 * n * n * n);
    zval = (y - mu) / sigma;
  } else {
    const double u = std::log(static_cast<double>(n));
    const double mu = -1.5861 - 0.31082 * u - 0.083751 * u * u + 0.0038915 * u * u * u;
    const double sigma = std::exp(-0.4803 - 0.082676 * u + 0.0030302 * u * u);
    zval = (log1mw - mu) / sigma;
  }
  r.p_value = std_normal_cdf(-zval);  // upper tail of the transformed statistic
  return r;
}

// P(K > t) for the Kolmogorov distribution.  The alternating series
// converges fast for large t; the theta-function form is used below the
// crossover where the alternating series would need many terms.
inline double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.18) {
    double s = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * t * t);
      s += sign * term;
      sign = -sign;
      if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double e = (2.0 * k - 1.0) * std::numbers::pi / t;
    const double term = std::exp(-e * e / 8.0);
    s += term;
    if (term < 1e-18) break;
  }
  const double cdf = std::sqrt(2.0 * std::numbers::pi) / t * s;
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

// One-sample Kolmogorov-Smirnov test of u ~ Uniform(0,1).  Statistic is
// D = max(D+, D-); the p-value is the asymptotic Kolmogorov tail at
// sqrt(n) * D.
inline GofResult ks_uniform(std::vector<double> u) {
  const std::size_t n = u.size();
  if (n == 0) throw std::invalid_argument("ks_uniform: empty sample");
  for (double v : u)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::domain_error("ks_uniform: requires values in [0,1]");
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ecdf_hi = static_cast<double>(i + 1) / n;
    const double ecdf_lo = static_cast<double>(i) / n;
    d = std::max(d, std::max(ecdf_hi - u[i], u[i] - ecdf_lo));
  }
  GofResult r;
  r.statistic = d;
  r.p_value = kolmogorov_survival(std::sqrt(static_cast<double>(n)) * d);
  r.n = static_cast<int>(n);
  r.method = "ks-uniform";
  return r;
}

// Replicated Shapiro-Wilk: redraws the randomization R times over the same
// data and fitted laws, testing the normal scores each time.  The spread of
// the resulting p-values shows whether a verdict depends on the particular
// uniforms drawn; under a sound model most of them sit above alpha.
struct ReplicatedSwResult {
  std::vector<double> p_values;

  double fraction_above(double alpha) const {
    if (p_values.empty()) return 0.0;
    std::size_t c = 0;
    for (double p : p_values)
      if (p > alpha) ++c;
    return static_cast<double>(c) / static_cast<double>(p_values.size());
  }
  double median() const {
    if (p_values.empty()) return 0.0;
    std::vector<double> s = p_values;
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  }
};

// Replicate r draws its uniforms from the substream derived as (seed, {r}),
// so the result is independent of evaluation order and replicates could be
// computed concurrently without changing the output.
template <typename Dist, typename Y>
ReplicatedSwResult replicated_shapiro(const std::vector<Dist>& models, const std::vector<Y>& y,
                                      int replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("replicated_shapiro: replicates must be >= 1");
  if (models.size() != y.size())
    throw std::invalid_argument("replicated_shapiro: models and y differ in length");
  ReplicatedSwResult out;
  out.p_values.reserve(replicates);
  std::vector<double> scores(y.size());
  for (int r = 0; r < replicates; ++r) {
    Stream rng = Stream::derive(seed, {static_cast<std::uint64_t>(r)});
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double u = rng.uniform_open();
      scores[i] = normal_score(randomized_pvalue(models[i], y[i], u));
    }
    out.p_values.push_back(shapiro_wilk(scores).p_value);
  }
  return out;
}

// Points for a normal QQ plot of `z`: x = Phi^{-1}((i - 3/8)/(n + 1/4)),
// y = the i-th order statistic.
inline std::vector<std::pair<double, double>> normal_qq(std::vector<double> z) {
  const std::size_t n = z.size();
  if (n == 0) throw std::invalid_argument("normal_qq: empty sample");
  std::sort(z.begin(), z.end());
  std::vector<std::pair<double, double>> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.emplace_back(std_normal_quantile((i + 1 - 0.375) / (n + 0.25)), z[i]);
  return pts;
}

}  // namespace residuum
