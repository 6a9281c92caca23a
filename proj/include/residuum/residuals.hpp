// Predictive p-value residuals for discrete responses, plus the classical
// Pearson and deviance residuals for comparison.
//
// For a count Y with fitted distribution F, the randomized predictive
// p-value is
//
//   rpp = F(y-) + u * P(Y = y),   u ~ U(0,1)
//
// which is exactly Uniform(0,1) when F is the true law of Y.  Its normal
// score Phi^{-1}(rpp) is then exactly standard normal, which is what the
// goodness-of-fit layer tests.  The mid p-value variant fixes u = 1/2; it
// is not uniform but needs no randomization.
//
// P-values are clamped to [1e-300, 1 - 1e-16] before the normal quantile,
// so scores stay finite (roughly |z| <= 37) even for extreme tail cases.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "residuum/distributions.hpp"
#include "residuum/rng.hpp"
#include "residuum/special_functions.hpp"

namespace residuum {

inline constexpr double kPValueFloor = 1e-300;
inline constexpr double kPValueCeil = 1.0 - 1e-16;

inline double clamp_pvalue(double p) {
  if (p < kPValueFloor) return kPValueFloor;
  if (p > kPValueCeil) return kPValueCeil;
  return p;
}

// Normal score of a predictive p-value (clamped first, so always finite).
inline double normal_score(double pvalue) {
  return std_normal_quantile(clamp_pvalue(pvalue));
}

// Response type Y is int for count laws and double for the Normal law; for
// the latter the mass term vanishes, so the value is cdf(y) regardless of u.
template <typename Dist, typename Y>
double randomized_pvalue(const Dist& d, Y y, double u) {
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("randomized_pvalue: requires u in [0,1]");
  return d.cdf_below(y) + u * d.pmf(y);
}

template <typename Dist, typename Y>
double mid_pvalue(const Dist& d, Y y) {
  return d.cdf_below(y) + 0.5 * d.pmf(y);
}

template <typename Dist, typename Y>
double pearson_residual(const Dist& d, Y y) {
  if constexpr (std::is_integral_v<Y>) detail::check_count(y, "pearson_residual");
  return (y - d.mean()) / std::sqrt(d.variance());
}

namespace detail {

// log pmf of the saturated Poisson model, Pois(y; y); zero when y = 0.
// This is the tightest count model with a free mean per observation, and it
// dominates every distribution in this header, so deviances stay >= 0.
inline double saturated_log_pmf(int y) {
  if (y == 0) return 0.0;
  return -static_cast<double>(y) + y * std::log(static_cast<double>(y)) - std::lgamma(y + 1.0);
}

inline double signed_root_deviance(double dev_sq, double y, double mean, const char* fn) {
  if (dev_sq < 0.0) {
    if (dev_sq < -1e-10)
      throw numeric_error(std::string(fn) + ": negative squared deviance " +
                          std::to_string(dev_sq));
    dev_sq = 0.0;
  }
  const double root = std::sqrt(dev_sq);
  return y < mean ? -root : root;
}

}  // namespace detail

inline double deviance_residual(const Poisson& d, int y) {
  detail::check_count(y, "deviance_residual");
  const double mu = d.lambda();
  const double ylogy = y == 0 ? 0.0 : y * std::log(y / mu);
  const double dev_sq = 2.0 * (ylogy - (y - mu));
  return detail::signed_root_deviance(dev_sq, y, mu, "deviance_residual(poisson)");
}

inline double deviance_residual(const NegBin& d, int y) {
  detail::check_count(y, "deviance_residual");
  const double mu = d.mu();
  const double k = d.k();
  const double ylogy = y == 0 ? 0.0 : y * std::log(y / mu);
  const double dev_sq = 2.0 * (ylogy - (y + k) * std::log((y + k) / (mu + k)));
  return detail::signed_root_deviance(dev_sq, y, mu, "deviance_residual(negbin)");
}

// Zero-inflated families have no closed-form saturated likelihood; the
// saturated Poisson bound above serves as the reference model instead.
template <typename Base>
double deviance_residual(const ZeroInflated<Base>& d, int y) {
  detail::check_count(y, "deviance_residual");
  const double dev_sq = 2.0 * (detail::saturated_log_pmf(y) - d.log_pmf(y));
  return detail::signed_root_deviance(dev_sq, y, d.mean(), "deviance_residual(zero-inflated)");
}

// With known variance the normal deviance residual is the standardized
// residual itself: the saturated model puts the mean at y.
inline double deviance_residual(const Normal& d, double y) {
  return (y - d.mean()) / d.sigma();
}

// All residual kinds for one dataset, one row per observation.
struct ResidualTable {
  std::vector<double> rpp;       // randomized predictive p-value
  std::vector<double> nrpp;      // Phi^{-1}(rpp)
  std::vector<double> mpp;       // mid predictive p-value (u = 1/2)
  std::vector<double> nmpp;      // Phi^{-1}(mpp)
  std::vector<double> pearson;
  std::vector<double> deviance;
};

// Computes every residual kind for observation-specific fitted laws.
// Uniforms are drawn from `rng` in observation order, one per row, so a
// given (models, y, stream state) triple always yields identical output.
template <typename Dist, typename Y>
ResidualTable compute_residuals(const std::vector<Dist>& models, const std::vector<Y>& y,
                                Stream& rng) {
  if (models.size() != y.size())
    throw std::invalid_argument("compute_residuals: models and y differ in length");
  const std::size_t n = y.size();
  ResidualTable t;
  t.rpp.reserve(n);
  t.nrpp.reserve(n);
  t.mpp.reserve(n);
  t.nmpp.reserve(n);
  t.pearson.reserve(n);
  t.deviance.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform_open();
    const double rp = randomized_pvalue(models[i], y[i], u);
    const double mp = mid_pvalue(models[i], y[i]);
    t.rpp.push_back(clamp_pvalue(rp));
    t.nrpp.push_back(normal_score(rp));
    t.mpp.push_back(clamp_pvalue(mp));
    t.nmpp.push_back(normal_score(mp));
    t.pearson.push_back(pearson_residual(models[i], y[i]));
    t.deviance.push_back(deviance_residual(models[i], y[i]));
  }
  return t;
}

// Classical whole-sample statistics: X2 sums squared Pearson residuals, D
// squared deviance residuals.  No p-value is attached; with estimated
// parameters neither statistic has a trustworthy chi-squared reference,
// which is what the p-value residuals are for.
struct AggregateStats {
  double pearson_chi2 = 0.0;
  double deviance = 0.0;
};

inline AggregateStats aggregate_stats(const std::vector<double>& pearson,
                                      const std::vector<double>& deviance) {
  if (pearson.size() != deviance.size())
    throw std::invalid_argument("aggregate_stats: residual sets differ in length");
  AggregateStats s;
  for (double r : pearson) s.pearson_chi2 += r * r;
  for (double d : deviance) s.deviance += d * d;
  return s;
}

inline AggregateStats aggregate_stats(const ResidualTable& t) {
  return aggregate_stats(t.pearson, t.deviance);
}

}  // namespace residuum
