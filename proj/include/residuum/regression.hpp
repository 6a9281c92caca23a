// Maximum-likelihood count regression for the four response families.
// The mean model is log-linear, mu = exp(X beta); zero-inflated families
// add a logistic zero-mass model, p = sigmoid(Z gamma).  The dispersion k
// of the negative binomial families satisfies Var = mu + mu^2/k.
//
// Fitting strategy: a family-specific initializer (IRLS for Poisson and
// negative binomial, EM for the zero-inflated families) followed by a
// shared Newton polish on the packed parameter vector
//
//   theta = [beta; gamma (if zero-inflated); log k (if dispersed)]
//
// using the analytic score and a finite-difference Hessian of that score.
// Standard errors come from the inverse observed information at the
// optimum; the dispersion's standard error is reported on the log scale.
//
// Convergence: relative log-likelihood change below rel_ll_tol, or maximum
// absolute score below score_tol.  Hitting max_iter leaves the result with
// converged = false; callers decide how to react.  log k is kept inside
// [log k_min, log k_max]; ending on the boundary sets k_at_bound and drops
// the dispersion row from the information matrix.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "residuum/distributions.hpp"
#include "residuum/special_functions.hpp"

namespace residuum {

struct FitOptions {
  int max_iter = 500;
  double rel_ll_tol = 1e-10;
  double score_tol = 1e-8;
  double k_min = 1e-4;
  double k_max = 1e6;
  // When set, the zero-inflated fitters append the observed-data
  // log-likelihood after every EM iteration (it must never decrease).
  std::vector<double>* em_trace = nullptr;
};

struct FitResult {
  Family family = Family::poisson;
  Eigen::VectorXd beta;   // mean model coefficients (log link)
  Eigen::VectorXd gamma;  // zero-inflation coefficients (logit link); empty otherwise
  double k = std::numeric_limits<double>::quiet_NaN();

  double log_lik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool k_at_bound = false;

  Eigen::VectorXd se_beta;
  Eigen::VectorXd se_gamma;
  double se_log_k = std::numeric_limits<double>::quiet_NaN();

  int n_parameters() const {
    return static_cast<int>(beta.size() + gamma.size()) + (has_dispersion(family) ? 1 : 0);
  }
  double aic() const { return 2.0 * n_parameters() - 2.0 * log_lik; }
};

namespace detail {

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void validate_design(const Eigen::MatrixXd& X, std::size_t n_obs, const char* name) {
  if (static_cast<std::size_t>(X.rows()) != n_obs)
    throw std::invalid_argument(std::string(name) + ": row count does not match response length");
  if (X.cols() < 1)
    throw std::invalid_argument(std::string(name) + ": needs at least one column");
  if (!X.allFinite())
    throw std::invalid_argument(std::string(name) + ": contains non-finite entries");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-8);
  if (qr.rank() < X.cols())
    throw std::invalid_argument(std::string(name) + ": columns are linearly dependent");
}

inline void validate_response(const std::vector<int>& y) {
  if (y.empty()) throw std::invalid_argument("response is empty");
  for (int v : y)
    if (v < 0) throw std::invalid_argument("response contains a negative count");
}

// argmin_b sum_i w_i (z_i - x_i' b)^2, w_i >= 0
inline Eigen::VectorXd weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& w) {
  const Eigen::VectorXd rw = w.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd Xw = rw.asDiagonal() * X;
  const Eigen::VectorXd zw = rw.cwiseProduct(z);
  return Xw.colPivHouseholderQr().solve(zw);
}

// Log-likelihood and analytic score over the packed parameter vector for
// one family.  Non-finite means (overflowing linear predictors) yield
// -inf log-likelihood, which the line search in the polish rejects.
class PackedModel {
 public:
  PackedModel(Family family, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
              const std::vector<int>& y)
      : family_(family), X_(X), Z_(Z), y_(y) {
    p_ = static_cast<int>(X.cols());
    pz_ = has_zero_inflation(family_) ? static_cast<int>(Z.cols()) : 0;
  }

  int dim() const { return p_ + pz_ + (has_dispersion(family_) ? 1 : 0); }
  int n_obs() const { return static_cast<int>(y_.size()); }
  int p() const { return p_; }
  int pz() const { return pz_; }
  Family family() const { return family_; }
  bool dispersed() const { return has_dispersion(family_); }
  bool zero_inflated() const { return has_zero_inflation(family_); }

  Eigen::VectorXd pack(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                       double log_k) const {
    Eigen::VectorXd th(dim());
    th.head(p_) = beta;
    if (pz_ > 0) th.segment(p_, pz_) = gamma;
    if (dispersed()) th(dim() - 1) = log_k;
    return th;
  }
  Eigen::VectorXd beta_of(const Eigen::VectorXd& th) const { return th.head(p_); }
  Eigen::VectorXd gamma_of(const Eigen::VectorXd& th) const { return th.segment(p_, pz_); }
  double log_k_of(const Eigen::VectorXd& th) const {
    return dispersed() ? th(dim() - 1) : std::numeric_limits<double>::quiet_NaN();
  }

  double log_lik(const Eigen::VectorXd& th) const {
    const Eigen::VectorXd eta_x = X_ * beta_of(th);
    Eigen::VectorXd eta_z;
    if (pz_ > 0) eta_z = Z_ * gamma_of(th);
    const double k = dispersed() ? std::exp(log_k_of(th)) : 0.0;
    const double log_k = dispersed() ? log_k_of(th) : 0.0;

    double ll = 0.0;
    for (int i = 0; i < n_obs(); ++i) {
      const double y = y_[i];
      const double ex = eta_x(i);
      const double mu = std::exp(ex);
      double li = 0.0;
      switch (family_) {
        case Family::poisson:
          li = y * ex - mu - std::lgamma(y + 1.0);
          break;
        case Family::negbin:
          li = std::lgamma(y + k) - std::lgamma(k) - std::lgamma(y + 1.0) + k * log_k +
               y * ex - (y + k) * std::log(k + mu);
          break;
        case Family::zip: {
          const double lp = -softplus(-eta_z(i));   // log p
          const double l1p = -softplus(eta_z(i));   // log(1-p)
          if (y_[i] == 0)
            li = log_add_exp(lp, l1p - mu);
          else
            li = l1p + y * ex - mu - std::lgamma(y + 1.0);
          break;
        }
        case Family::zinb: {
          const double lp = -softplus(-eta_z(i));
          const double l1p = -softplus(eta_z(i));
          const double log_q0 = k * (log_k - std::log(k + mu));
          if (y_[i] == 0)
            li = log_add_exp(lp, l1p + log_q0);
          else
            li = l1p + std::lgamma(y + k) - std::lgamma(k) - std::lgamma(y + 1.0) +
                 k * log_k + y * ex - (y + k) * std::log(k + mu);
          break;
        }
      }
      if (std::isnan(li)) return -std::numeric_limits<double>::infinity();
      ll += li;
    }
    return ll;
  }

  Eigen::VectorXd score(const Eigen::VectorXd& th) const {
    const Eigen::VectorXd eta_x = X_ * beta_of(th);
    Eigen::VectorXd eta_z;
    if (pz_ > 0) eta_z = Z_ * gamma_of(th);
    const double k = dispersed() ? std::exp(log_k_of(th)) : 0.0;
    const double log_k = dispersed() ? log_k_of(th) : 0.0;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (int i = 0; i < n_obs(); ++i) {
      const double y = y_[i];
      const double mu = std::exp(eta_x(i));
      double dx = 0.0;   // dl / d eta_x
      double dz = 0.0;   // dl / d eta_z
      double dk = 0.0;   // dl / d log k
      switch (family_) {
        case Family::poisson:
          dx = y - mu;
          break;
        case Family::negbin:
          dx = k * (y - mu) / (k + mu);
          dk = k * (digamma(y + k) - digamma(k) + log_k + 1.0 - std::log(k + mu) -
                    (y + k) / (k + mu));
          break;
        case Family::zip: {
          const double p = sigmoid(eta_z(i));
          if (y_[i] == 0) {
            const double q = std::exp(-mu);
            const double denom = p + (1.0 - p) * q;
            dx = -(1.0 - p) * q * mu / denom;
            dz = p * (1.0 - p) * (1.0 - q) / denom;
          } else {
            dx = y - mu;
            dz = -p;
          }
          break;
        }
        case Family::zinb: {
          const double p = sigmoid(eta_z(i));
          if (y_[i] == 0) {
            const double q = std::exp(k * (log_k - std::log(k + mu)));
            const double denom = p + (1.0 - p) * q;
            const double dlogq_dx = -k * mu / (k + mu);
            const double dlogq_dk = k * (log_k + 1.0 - std::log(k + mu) - k / (k + mu));
            dx = (1.0 - p) * q * dlogq_dx / denom;
            dz = p * (1.0 - p) * (1.0 - q) / denom;
            dk = (1.0 - p) * q * dlogq_dk / denom;
          } else {
            dx = k * (y - mu) / (k + mu);
            dz = -p;
            dk = k * (digamma(y + k) - digamma(k) + log_k + 1.0 - std::log(k + mu) -
                      (y + k) / (k + mu));
          }
          break;
        }
      }
      g.head(p_) += dx * X_.row(i).transpose();
      if (pz_ > 0) g.segment(p_, pz_) += dz * Z_.row(i).transpose();
      if (dispersed()) g(dim() - 1) += dk;
    }
    return g;
  }

  // Observed information approximated by central differences of the
  // analytic score; symmetrized.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& th) const {
    const int d = dim();
    Eigen::MatrixXd H(d, d);
    for (int j = 0; j < d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(th(j)));
      Eigen::VectorXd tp = th, tm = th;
      tp(j) += h;
      tm(j) -= h;
      H.col(j) = (score(tp) - score(tm)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
  }

 private:
  Family family_;
  const Eigen::MatrixXd& X_;
  const Eigen::MatrixXd& Z_;
  const std::vector<int>& y_;
  int p_ = 0;
  int pz_ = 0;
};

// Newton ascent with step halving; keeps the log-likelihood nondecreasing.
// Returns the achieved log-likelihood.  `iterations` accumulates across
// calls so the initializer's work counts toward the cap.
inline double newton_polish(const PackedModel& model, Eigen::VectorXd& th, const FitOptions& opts,
                            int& iterations, bool& converged) {
  const int d = model.dim();
  const int k_idx = model.dispersed() ? d - 1 : -1;
  const double lo = std::log(opts.k_min);
  const double hi = std::log(opts.k_max);

  double ll = model.log_lik(th);
  while (iterations < opts.max_iter) {
    ++iterations;
    const Eigen::VectorXd g = model.score(th);
    if (g.cwiseAbs().maxCoeff() < opts.score_tol) {
      converged = true;
      return ll;
    }
    const Eigen::MatrixXd H = model.hessian(th);
    Eigen::VectorXd step = (-H).ldlt().solve(g);
    if (!step.allFinite() || g.dot(step) <= 0.0) step = g;  // fall back to steepest ascent

    double t = 1.0;
    double ll_new = ll;
    Eigen::VectorXd th_new = th;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      th_new = th + t * step;
      if (k_idx >= 0) th_new(k_idx) = std::clamp(th_new(k_idx), lo, hi);
      ll_new = model.log_lik(th_new);
      if (ll_new >= ll) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) return ll;  // stuck: let the caller inspect the flags
    const double rel = std::abs(ll_new - ll) / (std::abs(ll) + 1.0);
    th = th_new;
    ll = ll_new;
    if (rel < opts.rel_ll_tol) {
      converged = true;
      return ll;
    }
  }
  return ll;
}

// sqrt(diag((-H)^{-1})); NaN on any failure.  With the dispersion at its
// bound that row carries no information, so it is excluded and its slot
// reported as NaN.
inline Eigen::VectorXd standard_errors(const PackedModel& model, const Eigen::VectorXd& th,
                                       bool k_at_bound) {
  const int d = model.dim();
  Eigen::VectorXd se = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  const int used = (k_at_bound && model.dispersed()) ? d - 1 : d;
  if (used == 0) return se;
  const Eigen::MatrixXd H = model.hessian(th);
  const Eigen::MatrixXd info = -H.topLeftCorner(used, used);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) return se;
  const Eigen::MatrixXd cov = lu.inverse();
  for (int j = 0; j < used; ++j) se(j) = cov(j, j) > 0.0 ? std::sqrt(cov(j, j)) : se(j);
  return se;
}

inline void unpack_into(const PackedModel& model, const Eigen::VectorXd& th,
                        const Eigen::VectorXd& se, const FitOptions& opts, FitResult& out) {
  out.beta = model.beta_of(th);
  out.se_beta = se.head(model.p());
  if (model.zero_inflated()) {
    out.gamma = model.gamma_of(th);
    out.se_gamma = se.segment(model.p(), model.pz());
  }
  if (model.dispersed()) {
    const double log_k = model.log_k_of(th);
    out.k = std::exp(log_k);
    out.se_log_k = se(model.dim() - 1);
    const double eps = 1e-12;
    out.k_at_bound = log_k <= std::log(opts.k_min) + eps || log_k >= std::log(opts.k_max) - eps;
  }
  out.log_lik = model.log_lik(th);
}

// One IRLS pass for a log-link mean model with per-observation weights
// omega and Fisher weights w(mu); shared by the Poisson and negative
// binomial initializers (and their EM-weighted variants).
template <typename FisherWeight>
Eigen::VectorXd irls_log_link_step(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                   const Eigen::VectorXd& omega, const Eigen::VectorXd& beta,
                                   FisherWeight fisher_weight) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd w(n), z(n);
  for (int i = 0; i < n; ++i) {
    const double e = std::clamp(eta(i), -300.0, 300.0);
    const double mu = std::exp(e);
    w(i) = omega(i) * fisher_weight(mu);
    z(i) = e + (y[i] - mu) / mu;
  }
  return weighted_ls(X, z, w);
}

// Weighted Bernoulli IRLS with fractional responses r in [0,1]; used by the
// EM M-step for the zero-inflation coefficients.
inline Eigen::VectorXd logistic_irls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& r,
                                     Eigen::VectorXd gamma, int max_iter = 50) {
  const int n = static_cast<int>(Z.rows());
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = Z * gamma;
    Eigen::VectorXd w(n), z(n);
    for (int i = 0; i < n; ++i) {
      const double p = std::clamp(sigmoid(eta(i)), 1e-10, 1.0 - 1e-10);
      const double v = p * (1.0 - p);
      w(i) = v;
      z(i) = eta(i) + (r(i) - p) / v;
    }
    const Eigen::VectorXd next = weighted_ls(Z, z, w);
    const double delta = (next - gamma).cwiseAbs().maxCoeff();
    gamma = next;
    if (delta < 1e-10) break;
  }
  return gamma;
}

// Newton update of log k holding beta fixed, maximizing the (weighted)
// negative binomial log-likelihood.  Curvature comes from a finite
// difference of the analytic k-score.
inline double update_log_k(const Eigen::MatrixXd& X, const std::vector<int>& y,
                           const Eigen::VectorXd& omega, const Eigen::VectorXd& beta,
                           double log_k, const FitOptions& opts) {
  const int n = static_cast<int>(y.size());
  const Eigen::VectorXd eta = X * beta;
  const auto k_score = [&](double lk) {
    const double k = std::exp(lk);
    double g = 0.0;
    for (int i = 0; i < n; ++i) {
      const double mu = std::exp(std::clamp(eta(i), -300.0, 300.0));
      g += omega(i) * k * (digamma(y[i] + k) - digamma(k) + lk + 1.0 - std::log(k + mu) -
                           (y[i] + k) / (k + mu));
    }
    return g;
  };
  const double lo = std::log(opts.k_min);
  const double hi = std::log(opts.k_max);
  for (int it = 0; it < 25; ++it) {
    const double g = k_score(log_k);
    if (std::abs(g) < 1e-10) break;
    const double h = 1e-5 * std::max(1.0, std::abs(log_k));
    const double curv = (k_score(log_k + h) - k_score(log_k - h)) / (2.0 * h);
    double step = curv < 0.0 ? -g / curv : (g > 0.0 ? 0.5 : -0.5);
    step = std::clamp(step, -2.0, 2.0);
    const double next = std::clamp(log_k + step, lo, hi);
    if (std::abs(next - log_k) < 1e-12) {
      log_k = next;
      break;
    }
    log_k = next;
  }
  return log_k;
}

inline Eigen::VectorXd init_beta_least_squares(const Eigen::MatrixXd& X,
                                               const std::vector<int>& y) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = std::log(y[i] + 0.5);
  return weighted_ls(X, z, Eigen::VectorXd::Ones(n));
}

inline const Eigen::MatrixXd& empty_design() {
  static const Eigen::MatrixXd empty(0, 0);
  return empty;
}

}  // namespace detail

inline FitResult fit_poisson(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const FitOptions& opts = {}) {
  detail::validate_response(y);
  detail::validate_design(X, y.size(), "mean design matrix");
  detail::PackedModel model(Family::poisson, X, detail::empty_design(), y);

  Eigen::VectorXd beta = detail::init_beta_least_squares(X, y);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
  FitResult out;
  out.family = Family::poisson;
  int iterations = 0;
  bool converged = false;
  double ll = model.log_lik(beta);
  // IRLS is Newton for the canonical link, so this usually converges alone;
  // the polish below only mops up pathological paths.
  while (iterations < opts.max_iter / 2) {
    ++iterations;
    const Eigen::VectorXd next =
        detail::irls_log_link_step(X, y, ones, beta, [](double mu) { return mu; });
    if (!next.allFinite()) break;
    const double ll_new = model.log_lik(next);
    if (ll_new < ll) break;
    const double rel = std::abs(ll_new - ll) / (std::abs(ll) + 1.0);
    beta = next;
    ll = ll_new;
    if (rel < opts.rel_ll_tol) break;
  }
  Eigen::VectorXd th = beta;
  detail::newton_polish(model, th, opts, iterations, converged);
  out.iterations = iterations;
  out.converged = converged;
  const Eigen::VectorXd se = detail::standard_errors(model, th, false);
  detail::unpack_into(model, th, se, opts, out);
  return out;
}

inline FitResult fit_negbin(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const FitOptions& opts = {}) {
  detail::validate_response(y);
  detail::validate_design(X, y.size(), "mean design matrix");
  detail::PackedModel model(Family::negbin, X, detail::empty_design(), y);

  const int n = static_cast<int>(y.size());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  FitResult poisson_fit = fit_poisson(X, y, opts);
  Eigen::VectorXd beta = poisson_fit.beta;

  // method-of-moments start for k from the Poisson residuals
  double num = 0.0, den = 0.0;
  {
    const Eigen::VectorXd eta = X * beta;
    for (int i = 0; i < n; ++i) {
      const double mu = std::exp(std::clamp(eta(i), -300.0, 300.0));
      num += mu * mu;
      den += (y[i] - mu) * (y[i] - mu) - mu;
    }
  }
  double k0 = den > 0.0 ? num / den : 1e4;
  k0 = std::clamp(k0, 1e-3, 1e4);
  double log_k = std::log(k0);

  FitResult out;
  out.family = Family::negbin;
  int iterations = 0;
  bool converged = false;
  double ll = model.log_lik(model.pack(beta, Eigen::VectorXd(), log_k));
  while (iterations < opts.max_iter / 2) {
    ++iterations;
    const double k = std::exp(log_k);
    const Eigen::VectorXd next = detail::irls_log_link_step(
        X, y, ones, beta, [k](double mu) { return mu * k / (k + mu); });
    if (!next.allFinite()) break;
    beta = next;
    log_k = detail::update_log_k(X, y, ones, beta, log_k, opts);
    const double ll_new = model.log_lik(model.pack(beta, Eigen::VectorXd(), log_k));
    const double rel = std::abs(ll_new - ll) / (std::abs(ll) + 1.0);
    ll = ll_new;
    if (rel < 1e-9) break;
  }
  Eigen::VectorXd th = model.pack(beta, Eigen::VectorXd(), log_k);
  detail::newton_polish(model, th, opts, iterations, converged);
  out.iterations = iterations;
  out.converged = converged;
  const double final_log_k = model.log_k_of(th);
  const bool at_bound = final_log_k <= std::log(opts.k_min) + 1e-12 ||
                        final_log_k >= std::log(opts.k_max) - 1e-12;
  const Eigen::VectorXd se = detail::standard_errors(model, th, at_bound);
  detail::unpack_into(model, th, se, opts, out);
  return out;
}

namespace detail {

// Shared EM skeleton for the zero-inflated families.  `dispersed` selects
// the negative binomial count component.
inline FitResult fit_zero_inflated(Family family, const Eigen::MatrixXd& X,
                                   const Eigen::MatrixXd& Z, const std::vector<int>& y,
                                   const FitOptions& opts) {
  validate_response(y);
  validate_design(X, y.size(), "mean design matrix");
  validate_design(Z, y.size(), "zero-inflation design matrix");
  const bool disp = has_dispersion(family);
  PackedModel model(family, X, Z, y);

  const int n = static_cast<int>(y.size());
  int n_zero = 0;
  for (int v : y)
    if (v == 0) ++n_zero;
  if (n_zero == 0)
    throw std::invalid_argument("zero-inflated fit: response has no zeros");

  // starting values: count model on all data, zero mass from the excess of
  // zeros over what that count model predicts at the mean
  FitResult base = disp ? fit_negbin(X, y, opts) : fit_poisson(X, y, opts);
  Eigen::VectorXd beta = base.beta;
  double log_k = disp ? std::log(std::clamp(base.k, opts.k_min, opts.k_max)) : 0.0;

  double ybar = 0.0;
  for (int v : y) ybar += v;
  ybar /= n;
  const double q_at_mean =
      disp ? std::exp(std::exp(log_k) * (log_k - std::log(std::exp(log_k) + ybar)))
           : std::exp(-ybar);
  const double zero_frac = static_cast<double>(n_zero) / n;
  double p0 = (zero_frac - q_at_mean) / std::max(1e-12, 1.0 - q_at_mean);
  p0 = std::clamp(p0, 0.01, 0.95);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(Z.cols());
  gamma(0) = std::log(p0 / (1.0 - p0));  // column 0 is the intercept by convention

  int iterations = 0;
  double ll = model.log_lik(model.pack(beta, gamma, log_k));
  if (opts.em_trace != nullptr) opts.em_trace->push_back(ll);
  const int em_cap = std::max(50, opts.max_iter / 2);
  while (iterations < em_cap) {
    ++iterations;
    // E-step: posterior mass of the zero component at observed zeros
    const Eigen::VectorXd eta_x = X * beta;
    const Eigen::VectorXd eta_z = Z * gamma;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    const double k = std::exp(log_k);
    for (int i = 0; i < n; ++i) {
      if (y[i] != 0) continue;
      const double mu = std::exp(std::clamp(eta_x(i), -300.0, 300.0));
      const double p = sigmoid(eta_z(i));
      const double q = disp ? std::exp(k * (log_k - std::log(k + mu))) : std::exp(-mu);
      w(i) = p / (p + (1.0 - p) * q);
    }
    // M-step
    gamma = logistic_irls(Z, w, gamma);
    const Eigen::VectorXd omega = Eigen::VectorXd::Ones(n) - w;
    for (int inner = 0; inner < 5; ++inner) {
      Eigen::VectorXd next;
      if (disp) {
        const double kk = std::exp(log_k);
        next = irls_log_link_step(X, y, omega, beta,
                                  [kk](double mu) { return mu * kk / (kk + mu); });
      } else {
        next = irls_log_link_step(X, y, omega, beta, [](double mu) { return mu; });
      }
      if (!next.allFinite()) break;
      beta = next;
      if (disp) log_k = update_log_k(X, y, omega, beta, log_k, opts);
    }
    const double ll_new = model.log_lik(model.pack(beta, gamma, log_k));
    if (opts.em_trace != nullptr) opts.em_trace->push_back(ll_new);
    const double rel = std::abs(ll_new - ll) / (std::abs(ll) + 1.0);
    ll = ll_new;
    if (rel < 1e-9) break;
  }

  FitResult out;
  out.family = family;
  bool converged = false;
  Eigen::VectorXd th = model.pack(beta, gamma, log_k);
  newton_polish(model, th, opts, iterations, converged);
  out.iterations = iterations;
  out.converged = converged;
  bool at_bound = false;
  if (disp) {
    const double lk = model.log_k_of(th);
    at_bound = lk <= std::log(opts.k_min) + 1e-12 || lk >= std::log(opts.k_max) - 1e-12;
  }
  const Eigen::VectorXd se = standard_errors(model, th, at_bound);
  unpack_into(model, th, se, opts, out);
  return out;
}

}  // namespace detail

inline FitResult fit_zip(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                         const std::vector<int>& y, const FitOptions& opts = {}) {
  return detail::fit_zero_inflated(Family::zip, X, Z, y, opts);
}

inline FitResult fit_zinb(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                          const std::vector<int>& y, const FitOptions& opts = {}) {
  return detail::fit_zero_inflated(Family::zinb, X, Z, y, opts);
}

// Z is consulted only by the zero-inflated families.
inline FitResult fit_model(Family family, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const std::vector<int>& y, const FitOptions& opts = {}) {
  switch (family) {
    case Family::poisson: return fit_poisson(X, y, opts);
    case Family::negbin: return fit_negbin(X, y, opts);
    case Family::zip: return fit_zip(X, Z, y, opts);
    case Family::zinb: return fit_zinb(X, Z, y, opts);
  }
  throw std::invalid_argument("fit_model: unknown family");
}

// Per-observation fitted laws, for the residual and replication layers.

inline std::vector<Poisson> poisson_laws(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  std::vector<Poisson> laws;
  laws.reserve(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) laws.emplace_back(std::exp(eta(i)));
  return laws;
}

inline std::vector<NegBin> negbin_laws(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                       double k) {
  const Eigen::VectorXd eta = X * beta;
  std::vector<NegBin> laws;
  laws.reserve(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) laws.emplace_back(std::exp(eta(i)), k);
  return laws;
}

inline std::vector<ZeroInflatedPoisson> zip_laws(const Eigen::MatrixXd& X,
                                                 const Eigen::MatrixXd& Z,
                                                 const Eigen::VectorXd& beta,
                                                 const Eigen::VectorXd& gamma) {
  const Eigen::VectorXd eta_x = X * beta;
  const Eigen::VectorXd eta_z = Z * gamma;
  std::vector<ZeroInflatedPoisson> laws;
  laws.reserve(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    laws.emplace_back(std::exp(eta_x(i)),
                      std::min(detail::sigmoid(eta_z(i)), 1.0 - 1e-12));
  return laws;
}

inline std::vector<ZeroInflatedNegBin> zinb_laws(const Eigen::MatrixXd& X,
                                                 const Eigen::MatrixXd& Z,
                                                 const Eigen::VectorXd& beta,
                                                 const Eigen::VectorXd& gamma, double k) {
  const Eigen::VectorXd eta_x = X * beta;
  const Eigen::VectorXd eta_z = Z * gamma;
  std::vector<ZeroInflatedNegBin> laws;
  laws.reserve(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    laws.emplace_back(std::exp(eta_x(i)), k,
                      std::min(detail::sigmoid(eta_z(i)), 1.0 - 1e-12));
  return laws;
}

}  // namespace residuum
