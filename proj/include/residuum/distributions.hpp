// Response distributions: Poisson, negative binomial, their zero-inflated
// variants, a finite probability table, and a continuous normal law.  Each
// type exposes the same interface so the residual and simulation code can
// be written once against a template parameter:
//
//   double log_pmf(y)   log P(Y = y)
//   double pmf(y)       P(Y = y)
//   double cdf(y)       P(Y <= y)
//   double cdf_below(y) P(Y < y), i.e. cdf(y - 1) for integer support
//   double mean(), variance()
//   sample(Stream&)
//
// Count laws take int y and sample to int; the Normal law takes double y,
// has pmf identically zero (it carries no point mass anywhere, so
// cdf_below == cdf), and samples to double.
//
// The negative binomial uses the (mu, k) parameterization with
// Var = mu + mu^2/k, so k -> infinity recovers the Poisson.  Zero-inflated
// families mix a point mass at zero (weight p) with the base count law.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "residuum/rng.hpp"
#include "residuum/special_functions.hpp"

namespace residuum {

enum class Family { poisson, negbin, zip, zinb };

inline bool has_dispersion(Family f) { return f == Family::negbin || f == Family::zinb; }
inline bool has_zero_inflation(Family f) { return f == Family::zip || f == Family::zinb; }

inline const char* family_name(Family f) {
  switch (f) {
    case Family::poisson: return "poisson";
    case Family::negbin: return "negbin";
    case Family::zip: return "zip";
    case Family::zinb: return "zinb";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "poisson") return Family::poisson;
  if (s == "negbin") return Family::negbin;
  if (s == "zip") return Family::zip;
  if (s == "zinb") return Family::zinb;
  throw std::invalid_argument("unknown family '" + s +
                              "' (expected poisson, negbin, zip, or zinb)");
}

namespace detail {

inline void check_count(int y, const char* fn) {
  if (y < 0) throw std::domain_error(std::string(fn) + ": requires y >= 0");
}

// log(exp(a) + exp(b)) without overflow; tolerates -inf arguments.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Smallest y with P(Y <= y) >= u, by doubling then bisection on the CDF.
// Used when the pmf at zero underflows and forward inversion cannot start.
template <typename Dist>
int sample_by_cdf_bisection(const Dist& d, double u) {
  int lo = 0;
  int hi = static_cast<int>(d.mean() + 10.0 * std::sqrt(d.variance())) + 1;
  while (d.cdf(hi) < u) {
    lo = hi + 1;
    if (hi > (1 << 29)) throw numeric_error("count sampler: cdf never reached u");
    hi *= 2;
  }
  if (d.cdf(0) >= u) return 0;
  // invariant: cdf(lo - 1) < u <= cdf(hi)
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (d.cdf(mid) >= u) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

}  // namespace detail

class Poisson {
 public:
  explicit Poisson(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::domain_error("Poisson: requires lambda > 0, got " + std::to_string(lambda));
  }

  double log_pmf(int y) const {
    detail::check_count(y, "Poisson::log_pmf");
    return -lambda_ + y * std::log(lambda_) - std::lgamma(y + 1.0);
  }
  double pmf(int y) const { return std::exp(log_pmf(y)); }

  // P(Y <= y) = Q(y+1, lambda), the upper regularized incomplete gamma.
  double cdf(int y) const {
    detail::check_count(y, "Poisson::cdf");
    return reg_upper_inc_gamma(y + 1.0, lambda_);
  }
  double cdf_below(int y) const {
    detail::check_count(y, "Poisson::cdf_below");
    return y == 0 ? 0.0 : cdf(y - 1);
  }

  double mean() const { return lambda_; }
  double variance() const { return lambda_; }
  double lambda() const { return lambda_; }

  int sample(Stream& rng) const {
    const double u = rng.uniform_open();
    if (lambda_ > 600.0) return detail::sample_by_cdf_bisection(*this, u);
    // forward inversion: p(y+1) = p(y) * lambda / (y+1)
    double p = std::exp(-lambda_);
    double acc = p;
    int y = 0;
    while (acc < u) {
      ++y;
      p *= lambda_ / y;
      acc += p;
      if (y > 100000000) throw numeric_error("Poisson::sample: inversion did not terminate");
    }
    return y;
  }

 private:
  double lambda_;
};

class NegBin {
 public:
  NegBin(double mu, double k) : mu_(mu), k_(k) {
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw std::domain_error("NegBin: requires mu > 0, got " + std::to_string(mu));
    if (!(k > 0.0) || !std::isfinite(k))
      throw std::domain_error("NegBin: requires k > 0, got " + std::to_string(k));
  }

  double log_pmf(int y) const {
    detail::check_count(y, "NegBin::log_pmf");
    return std::lgamma(y + k_) - std::lgamma(k_) - std::lgamma(y + 1.0)
         + k_ * std::log(k_ / (k_ + mu_)) + y * std::log(mu_ / (k_ + mu_));
  }
  double pmf(int y) const { return std::exp(log_pmf(y)); }

  // P(Y <= y) = I_{k/(k+mu)}(k, y+1), the regularized incomplete beta.
  double cdf(int y) const {
    detail::check_count(y, "NegBin::cdf");
    return reg_inc_beta(k_, y + 1.0, k_ / (k_ + mu_));
  }
  double cdf_below(int y) const {
    detail::check_count(y, "NegBin::cdf_below");
    return y == 0 ? 0.0 : cdf(y - 1);
  }

  double mean() const { return mu_; }
  double variance() const { return mu_ + mu_ * mu_ / k_; }
  double mu() const { return mu_; }
  double k() const { return k_; }

  int sample(Stream& rng) const {
    const double u = rng.uniform_open();
    const double log_p0 = k_ * std::log(k_ / (k_ + mu_));
    if (log_p0 < -700.0) return detail::sample_by_cdf_bisection(*this, u);
    // forward inversion: p(y+1) = p(y) * (y+k)/(y+1) * mu/(k+mu)
    const double ratio = mu_ / (k_ + mu_);
    double p = std::exp(log_p0);
    double acc = p;
    int y = 0;
    while (acc < u) {
      ++y;
      p *= (y - 1 + k_) / y * ratio;
      acc += p;
      if (y > 100000000) throw numeric_error("NegBin::sample: inversion did not terminate");
    }
    return y;
  }

 private:
  double mu_;
  double k_;
};

// Mixes a point mass at zero (weight p) with a base count distribution.
// Shared by the zero-inflated Poisson and negative binomial below.
template <typename Base>
class ZeroInflated {
 public:
  ZeroInflated(Base base, double p) : base_(std::move(base)), p_(p) {
    if (!(p >= 0.0 && p < 1.0))
      throw std::domain_error("ZeroInflated: requires p in [0,1), got " + std::to_string(p));
  }

  double log_pmf(int y) const {
    detail::check_count(y, "ZeroInflated::log_pmf");
    const double log_base = std::log1p(-p_) + base_.log_pmf(y);
    if (y == 0 && p_ > 0.0) return detail::log_add_exp(std::log(p_), log_base);
    return log_base;
  }
  double pmf(int y) const { return std::exp(log_pmf(y)); }

  double cdf(int y) const {
    detail::check_count(y, "ZeroInflated::cdf");
    return p_ + (1.0 - p_) * base_.cdf(y);
  }
  double cdf_below(int y) const {
    detail::check_count(y, "ZeroInflated::cdf_below");
    return y == 0 ? 0.0 : cdf(y - 1);
  }

  double mean() const { return (1.0 - p_) * base_.mean(); }
  double variance() const {
    const double m = base_.mean();
    return (1.0 - p_) * (base_.variance() + p_ * m * m);
  }
  double p() const { return p_; }
  const Base& base() const { return base_; }

  int sample(Stream& rng) const {
    if (rng.uniform() < p_) return 0;
    return base_.sample(rng);
  }

 private:
  Base base_;
  double p_;
};

// Distribution with finite support {0, 1, ..., m} given by a probability
// table.  Used where exactness matters: the table makes pmf/cdf trivially
// correct, so layered code can be checked against it.
class FiniteSupport {
 public:
  explicit FiniteSupport(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::domain_error("FiniteSupport: empty probability table");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw std::domain_error("FiniteSupport: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::domain_error("FiniteSupport: probabilities sum to " + std::to_string(total));
    cum_.resize(probs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      acc += probs_[i];
      cum_[i] = acc;
    }
    cum_.back() = 1.0;
  }

  double pmf(int y) const {
    detail::check_count(y, "FiniteSupport::pmf");
    return y < static_cast<int>(probs_.size()) ? probs_[y] : 0.0;
  }
  double log_pmf(int y) const { return std::log(pmf(y)); }
  double cdf(int y) const {
    detail::check_count(y, "FiniteSupport::cdf");
    return y < static_cast<int>(cum_.size()) ? cum_[y] : 1.0;
  }
  double cdf_below(int y) const {
    detail::check_count(y, "FiniteSupport::cdf_below");
    return y == 0 ? 0.0 : cdf(y - 1);
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) m += i * probs_[i];
    return m;
  }
  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) v += (i - m) * (i - m) * probs_[i];
    return v;
  }

  int sample(Stream& rng) const {
    const double u = rng.uniform_open();
    for (std::size_t i = 0; i < cum_.size(); ++i)
      if (u <= cum_[i]) return static_cast<int>(i);
    return static_cast<int>(cum_.size()) - 1;
  }

 private:
  std::vector<double> probs_;
  std::vector<double> cum_;
};

// Continuous normal response.  Included because it is the boundary case of
// the predictive p-value construction: with no mass term the randomized and
// mid p-values both collapse to cdf(y), and the normal score of that value
// is exactly the standardized residual.  The count-oriented layers above
// this header work unchanged because pmf() is exactly zero.
class Normal {
 public:
  Normal(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!std::isfinite(mu)) throw std::domain_error("Normal: requires finite mu");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::domain_error("Normal: requires sigma > 0, got " + std::to_string(sigma));
  }

  // Point mass, not density: a continuous law has none.
  double pmf(double) const { return 0.0; }
  double log_pmf(double) const { return -std::numeric_limits<double>::infinity(); }

  double cdf(double y) const { return std_normal_cdf((y - mu_) / sigma_); }
  double cdf_below(double y) const { return cdf(y); }

  double mean() const { return mu_; }
  double variance() const { return sigma_ * sigma_; }
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }

  double sample(Stream& rng) const {
    return mu_ + sigma_ * std_normal_quantile(rng.uniform_open());
  }

 private:
  double mu_;
  double sigma_;
};

class ZeroInflatedPoisson : public ZeroInflated<Poisson> {
 public:
  ZeroInflatedPoisson(double lambda, double p) : ZeroInflated<Poisson>(Poisson(lambda), p) {}
  double lambda() const { return base().lambda(); }
};

class ZeroInflatedNegBin : public ZeroInflated<NegBin> {
 public:
  ZeroInflatedNegBin(double mu, double k, double p)
      : ZeroInflated<NegBin>(NegBin(mu, k), p) {}
  double mu() const { return base().mu(); }
  double k() const { return base().k(); }
};

}  // namespace residuum
