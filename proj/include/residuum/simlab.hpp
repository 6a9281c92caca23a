// Monte-Carlo study of the diagnostic tests: size under a correctly
// specified model and power against a misspecified one, over a grid of
// sample sizes and scenario strengths.
//
// Each scenario defines a data-generating law, a correctly specified fit
// and a deliberately wrong one:
//
//   finite_pmf        y ~ table {0.25, 0.5, 0.25} on {0,1,2}; the wrong
//                     evaluation uses the table {0.1, 0.8, 0.1}.  No
//                     fitting: checks the p-value machinery in isolation.
//   sine_poisson      x ~ U(0, 2pi), y ~ Pois(exp(-1 + 2 sin 2x)); correct
//                     fit uses sin 2x as the covariate, wrong fit uses x.
//   nb_quadratic      x ~ U(-1.5, 1.5), y ~ NB(exp(level * x^2), k = 2);
//                     correct fit is on x^2, wrong fit on x.
//                     level in {0.5, 1, 2}.
//   nb_dispersion     x ~ U(-1, 2), y ~ NB(exp(1 + 2x), k = level);
//                     correct fit is negative binomial, wrong is Poisson.
//                     level in {1, 2, 10}.
//   zip_excess_zeros  x ~ U(-1, 2), y ~ ZIP(exp(1 + 2x), p = level);
//                     correct fit is ZIP (intercept-only zero model),
//                     wrong is Poisson.  level in {0.1, 0.3, 0.5}.
//
// Covariates are redrawn every replicate, so the rejection rates average
// over designs rather than conditioning on one.  Every random draw comes
// from a stream derived as
//
//   derive(master, {scenario, n, bits(level), replicate, phase})
//
// with phases 0 = covariates, 1 = response, 2/3 = residual randomization
// for the correct/wrong evaluation, making any single cell or replicate
// reproducible in isolation.
//
// A replicate fails if a fit throws or does not converge; a cell with more
// than 5% failed replicates is flagged invalid.  Rates are over the
// successful replicates.

#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "residuum/distributions.hpp"
#include "residuum/gof.hpp"
#include "residuum/regression.hpp"
#include "residuum/residuals.hpp"
#include "residuum/rng.hpp"

namespace residuum {

enum class Scenario { finite_pmf, sine_poisson, nb_quadratic, nb_dispersion, zip_excess_zeros };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::finite_pmf: return "finite_pmf";
    case Scenario::sine_poisson: return "sine_poisson";
    case Scenario::nb_quadratic: return "nb_quadratic";
    case Scenario::nb_dispersion: return "nb_dispersion";
    case Scenario::zip_excess_zeros: return "zip_excess_zeros";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "finite_pmf") return Scenario::finite_pmf;
  if (s == "sine_poisson") return Scenario::sine_poisson;
  if (s == "nb_quadratic") return Scenario::nb_quadratic;
  if (s == "nb_dispersion") return Scenario::nb_dispersion;
  if (s == "zip_excess_zeros") return Scenario::zip_excess_zeros;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

inline std::vector<Scenario> all_scenarios() {
  return {Scenario::finite_pmf, Scenario::sine_poisson, Scenario::nb_quadratic,
          Scenario::nb_dispersion, Scenario::zip_excess_zeros};
}

// Strength levels a scenario is studied at; {0} when it has no knob.
inline std::vector<double> scenario_levels(Scenario s) {
  switch (s) {
    case Scenario::finite_pmf: return {0.0};
    case Scenario::sine_poisson: return {0.0};
    case Scenario::nb_quadratic: return {0.5, 1.0, 2.0};
    case Scenario::nb_dispersion: return {1.0, 2.0, 10.0};
    case Scenario::zip_excess_zeros: return {0.1, 0.3, 0.5};
  }
  return {0.0};
}

inline std::vector<int> default_sample_sizes() {
  return {20, 50, 100, 200, 400, 600, 800, 1000};
}

namespace detail {

inline void validate_level(Scenario scenario, double level, const char* fn) {
  for (double v : scenario_levels(scenario))
    if (v == level) return;
  throw std::invalid_argument(std::string(fn) + ": level " + std::to_string(level) +
                              " is not defined for scenario " + scenario_name(scenario));
}

}  // namespace detail

// One generated dataset: the scalar covariate and the response.  The
// finite_pmf scenario draws no covariate, so x stays empty there.
struct ScenarioData {
  std::vector<double> x;
  std::vector<int> y;
};

// Draws the covariates from `cov`, then the responses from `resp`.  Split
// out from the power driver so one replicate's data can be regenerated in
// isolation from the same phase streams.
inline ScenarioData generate_scenario(Scenario scenario, int n, double level, Stream& cov,
                                      Stream& resp) {
  if (n < 1) throw std::invalid_argument("generate_scenario: n must be >= 1");
  detail::validate_level(scenario, level, "generate_scenario");
  ScenarioData d;
  d.y.resize(n);
  switch (scenario) {
    case Scenario::finite_pmf: {
      const FiniteSupport truth({0.25, 0.5, 0.25});
      for (int i = 0; i < n; ++i) d.y[i] = truth.sample(resp);
      break;
    }
    case Scenario::sine_poisson: {
      d.x.resize(n);
      for (int i = 0; i < n; ++i) d.x[i] = 2.0 * std::numbers::pi * cov.uniform();
      for (int i = 0; i < n; ++i)
        d.y[i] = Poisson(std::exp(-1.0 + 2.0 * std::sin(2.0 * d.x[i]))).sample(resp);
      break;
    }
    case Scenario::nb_quadratic: {
      d.x.resize(n);
      for (int i = 0; i < n; ++i) d.x[i] = -1.5 + 3.0 * cov.uniform();
      for (int i = 0; i < n; ++i)
        d.y[i] = NegBin(std::exp(level * d.x[i] * d.x[i]), 2.0).sample(resp);
      break;
    }
    case Scenario::nb_dispersion: {
      d.x.resize(n);
      for (int i = 0; i < n; ++i) d.x[i] = -1.0 + 3.0 * cov.uniform();
      for (int i = 0; i < n; ++i)
        d.y[i] = NegBin(std::exp(1.0 + 2.0 * d.x[i]), level).sample(resp);
      break;
    }
    case Scenario::zip_excess_zeros: {
      d.x.resize(n);
      for (int i = 0; i < n; ++i) d.x[i] = -1.0 + 3.0 * cov.uniform();
      for (int i = 0; i < n; ++i)
        d.y[i] = ZeroInflatedPoisson(std::exp(1.0 + 2.0 * d.x[i]), level).sample(resp);
      break;
    }
  }
  return d;
}

inline ScenarioData generate_scenario(Scenario scenario, int n, double level,
                                      std::uint64_t seed) {
  Stream cov = Stream::derive(seed, {0});
  Stream resp = Stream::derive(seed, {1});
  return generate_scenario(scenario, n, level, cov, resp);
}

// Rejection rates at one (scenario, n, level) grid point.  "true" columns
// evaluate residuals under the correctly specified model (so they estimate
// test size), "wrong" columns under the misspecified one (power).
struct PowerCell {
  Scenario scenario = Scenario::finite_pmf;
  int n = 0;
  double level = 0.0;
  int replicates = 0;
  int failures = 0;
  bool valid = false;

  double true_sw_nrpp = std::numeric_limits<double>::quiet_NaN();
  double true_sw_nmpp = std::numeric_limits<double>::quiet_NaN();
  double true_sw_pearson = std::numeric_limits<double>::quiet_NaN();
  double true_sw_deviance = std::numeric_limits<double>::quiet_NaN();
  double true_ks_rpp = std::numeric_limits<double>::quiet_NaN();
  double wrong_sw_nrpp = std::numeric_limits<double>::quiet_NaN();
  double wrong_ks_rpp = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct RejectionCounts {
  int sw_nrpp = 0;
  int sw_nmpp = 0;
  int sw_pearson = 0;
  int sw_deviance = 0;
  int ks_rpp = 0;
  bool deviance_defined = false;
};

// All residual kinds for one evaluated model; SW on the normal scores,
// KS on the raw randomized p-values.
template <typename Dist>
void tally_rejections(const std::vector<Dist>& models, const std::vector<int>& y, double alpha,
                      Stream& u_stream, RejectionCounts& c) {
  const ResidualTable t = compute_residuals(models, y, u_stream);
  if (shapiro_wilk(t.nrpp).p_value < alpha) ++c.sw_nrpp;
  if (shapiro_wilk(t.nmpp).p_value < alpha) ++c.sw_nmpp;
  if (shapiro_wilk(t.pearson).p_value < alpha) ++c.sw_pearson;
  if (shapiro_wilk(t.deviance).p_value < alpha) ++c.sw_deviance;
  if (ks_uniform(t.rpp).p_value < alpha) ++c.ks_rpp;
  c.deviance_defined = true;
}

// finite_pmf path: no deviance (no regression family to define it against).
inline void tally_rejections_table(const FiniteSupport& law, const std::vector<int>& y,
                                   double alpha, Stream& u_stream, RejectionCounts& c) {
  const std::size_t n = y.size();
  std::vector<double> rpp(n), nrpp(n), nmpp(n), pearson(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u_stream.uniform_open();
    const double rp = randomized_pvalue(law, y[i], u);
    rpp[i] = clamp_pvalue(rp);
    nrpp[i] = normal_score(rp);
    nmpp[i] = normal_score(mid_pvalue(law, y[i]));
    pearson[i] = pearson_residual(law, y[i]);
  }
  if (shapiro_wilk(nrpp).p_value < alpha) ++c.sw_nrpp;
  if (shapiro_wilk(nmpp).p_value < alpha) ++c.sw_nmpp;
  if (shapiro_wilk(pearson).p_value < alpha) ++c.sw_pearson;
  if (ks_uniform(rpp).p_value < alpha) ++c.ks_rpp;
}

inline Eigen::MatrixXd design_with(const std::vector<double>& col) {
  Eigen::MatrixXd X(col.size(), 2);
  for (std::size_t i = 0; i < col.size(); ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = col[i];
  }
  return X;
}

inline void require_converged(const FitResult& fit) {
  if (!fit.converged) throw numeric_error("fit did not converge");
}

}  // namespace detail

// Runs one grid cell.  Throws only on invalid arguments; per-replicate
// numerical trouble is absorbed into the failure count.
inline PowerCell run_power_cell(Scenario scenario, int n, double level, int replicates,
                                double alpha, std::uint64_t master_seed) {
  if (n < 3) throw std::invalid_argument("run_power_cell: n must be >= 3");
  if (replicates < 1) throw std::invalid_argument("run_power_cell: replicates must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("run_power_cell: alpha must be in (0,1)");
  detail::validate_level(scenario, level, "run_power_cell");

  const std::uint64_t sid = static_cast<std::uint64_t>(scenario);
  const std::uint64_t nid = static_cast<std::uint64_t>(n);
  const std::uint64_t lid = std::bit_cast<std::uint64_t>(level);

  PowerCell cell;
  cell.scenario = scenario;
  cell.n = n;
  cell.level = level;
  cell.replicates = replicates;

  detail::RejectionCounts true_counts, wrong_counts;
  int successes = 0;

  for (int rep = 0; rep < replicates; ++rep) {
    const std::uint64_t rid = static_cast<std::uint64_t>(rep);
    Stream cov = Stream::derive(master_seed, {sid, nid, lid, rid, 0});
    Stream resp = Stream::derive(master_seed, {sid, nid, lid, rid, 1});
    Stream u_true = Stream::derive(master_seed, {sid, nid, lid, rid, 2});
    Stream u_wrong = Stream::derive(master_seed, {sid, nid, lid, rid, 3});

    try {
      const ScenarioData data = generate_scenario(scenario, n, level, cov, resp);
      switch (scenario) {
        case Scenario::finite_pmf: {
          const FiniteSupport truth({0.25, 0.5, 0.25});
          const FiniteSupport wrong({0.1, 0.8, 0.1});
          detail::tally_rejections_table(truth, data.y, alpha, u_true, true_counts);
          detail::tally_rejections_table(wrong, data.y, alpha, u_wrong, wrong_counts);
          break;
        }
        case Scenario::sine_poisson: {
          std::vector<double> s2x(n);
          for (int i = 0; i < n; ++i) s2x[i] = std::sin(2.0 * data.x[i]);
          const Eigen::MatrixXd Xt = detail::design_with(s2x);
          const Eigen::MatrixXd Xw = detail::design_with(data.x);
          const FitResult ft = fit_poisson(Xt, data.y);
          detail::require_converged(ft);
          const FitResult fw = fit_poisson(Xw, data.y);
          detail::require_converged(fw);
          detail::tally_rejections(poisson_laws(Xt, ft.beta), data.y, alpha, u_true,
                                   true_counts);
          detail::tally_rejections(poisson_laws(Xw, fw.beta), data.y, alpha, u_wrong,
                                   wrong_counts);
          break;
        }
        case Scenario::nb_quadratic: {
          std::vector<double> xsq(n);
          for (int i = 0; i < n; ++i) xsq[i] = data.x[i] * data.x[i];
          const Eigen::MatrixXd Xt = detail::design_with(xsq);
          const Eigen::MatrixXd Xw = detail::design_with(data.x);
          const FitResult ft = fit_negbin(Xt, data.y);
          detail::require_converged(ft);
          const FitResult fw = fit_negbin(Xw, data.y);
          detail::require_converged(fw);
          detail::tally_rejections(negbin_laws(Xt, ft.beta, ft.k), data.y, alpha, u_true,
                                   true_counts);
          detail::tally_rejections(negbin_laws(Xw, fw.beta, fw.k), data.y, alpha, u_wrong,
                                   wrong_counts);
          break;
        }
        case Scenario::nb_dispersion: {
          const Eigen::MatrixXd X = detail::design_with(data.x);
          const FitResult ft = fit_negbin(X, data.y);
          detail::require_converged(ft);
          const FitResult fw = fit_poisson(X, data.y);
          detail::require_converged(fw);
          detail::tally_rejections(negbin_laws(X, ft.beta, ft.k), data.y, alpha, u_true,
                                   true_counts);
          detail::tally_rejections(poisson_laws(X, fw.beta), data.y, alpha, u_wrong,
                                   wrong_counts);
          break;
        }
        case Scenario::zip_excess_zeros: {
          const Eigen::MatrixXd X = detail::design_with(data.x);
          const Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(n, 1);
          const FitResult ft = fit_zip(X, Z, data.y);
          detail::require_converged(ft);
          const FitResult fw = fit_poisson(X, data.y);
          detail::require_converged(fw);
          detail::tally_rejections(zip_laws(X, Z, ft.beta, ft.gamma), data.y, alpha, u_true,
                                   true_counts);
          detail::tally_rejections(poisson_laws(X, fw.beta), data.y, alpha, u_wrong,
                                   wrong_counts);
          break;
        }
      }
      ++successes;
    } catch (const std::exception&) {
      ++cell.failures;
    }
  }

  cell.valid = successes > 0 &&
               cell.failures <= static_cast<int>(0.05 * static_cast<double>(replicates));
  if (successes > 0) {
    const double denom = successes;
    cell.true_sw_nrpp = true_counts.sw_nrpp / denom;
    cell.true_sw_nmpp = true_counts.sw_nmpp / denom;
    cell.true_sw_pearson = true_counts.sw_pearson / denom;
    cell.true_ks_rpp = true_counts.ks_rpp / denom;
    if (true_counts.deviance_defined) cell.true_sw_deviance = true_counts.sw_deviance / denom;
    cell.wrong_sw_nrpp = wrong_counts.sw_nrpp / denom;
    cell.wrong_ks_rpp = wrong_counts.ks_rpp / denom;
  }
  return cell;
}

// Full grid for one scenario: every requested n at every requested level
// (defaults: the scenario's own levels).
inline std::vector<PowerCell> run_power_study(Scenario scenario, const std::vector<int>& sizes,
                                              std::vector<double> levels, int replicates,
                                              double alpha, std::uint64_t master_seed) {
  if (levels.empty()) levels = scenario_levels(scenario);
  std::vector<PowerCell> cells;
  cells.reserve(sizes.size() * levels.size());
  for (double level : levels)
    for (int n : sizes)
      cells.push_back(run_power_cell(scenario, n, level, replicates, alpha, master_seed));
  return cells;
}

// One finite_pmf sample scored against both tables.  Under the generating
// table the randomized p-values are uniform; under the wrong table the
// support point probabilities 0.1/0.8/0.1 squeeze them into (0, 0.1),
// (0.1, 0.9) and (0.9, 1) according to the true frequencies 0.25/0.5/0.25,
// which the occupancy fractions report directly.
struct WrongPmfIllustration {
  std::vector<double> rpp_true;
  std::vector<double> rpp_wrong;
  double wrong_low = 0.0;   // fraction of rpp_wrong below 0.1
  double wrong_mid = 0.0;   // fraction between 0.1 and 0.9
  double wrong_high = 0.0;  // fraction above 0.9
};

inline WrongPmfIllustration illustrative_wrong_pmf(int n, std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("illustrative_wrong_pmf: n must be >= 100");
  const FiniteSupport truth({0.25, 0.5, 0.25});
  const FiniteSupport wrong({0.1, 0.8, 0.1});
  // same phase layout as run_power_cell: 1 response, 2/3 the two evaluations
  Stream resp = Stream::derive(seed, {1});
  Stream u_true = Stream::derive(seed, {2});
  Stream u_wrong = Stream::derive(seed, {3});

  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) y[i] = truth.sample(resp);

  WrongPmfIllustration out;
  out.rpp_true.reserve(n);
  out.rpp_wrong.reserve(n);
  for (int i = 0; i < n; ++i)
    out.rpp_true.push_back(clamp_pvalue(randomized_pvalue(truth, y[i], u_true.uniform_open())));
  int low = 0, high = 0;
  for (int i = 0; i < n; ++i) {
    const double v = clamp_pvalue(randomized_pvalue(wrong, y[i], u_wrong.uniform_open()));
    out.rpp_wrong.push_back(v);
    if (v < 0.1) ++low;
    else if (v > 0.9) ++high;
  }
  out.wrong_low = static_cast<double>(low) / n;
  out.wrong_high = static_cast<double>(high) / n;
  out.wrong_mid = 1.0 - out.wrong_low - out.wrong_high;
  return out;
}

}  // namespace residuum
