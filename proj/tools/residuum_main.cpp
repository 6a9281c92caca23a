// Command-line front end: fit, diagnose, simulate.
//
// Exit codes: 0 success, 2 input error, 3 fit did not converge, 4 numeric
// failure.  The master seed resolves as: --seed flag, then a "seed" entry
// in --config, then the RESIDUUM_SEED environment variable, then a fixed
// default.  Runs with the same data, options, and seed are bit-identical,
// including every file written under --out.
//
// --out names a directory; each subcommand writes its artifacts there:
//   fit       fit_report.json
//   diagnose  diagnostic_report.json, residuals.csv, qq.csv,
//             replicated_pvalues.csv
//   simulate  power.csv, cells.log
// Reports are flat key-value JSON; everything tabular is CSV, so artifacts
// diff cleanly across runs.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "residuum/residuum.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConverge = 3;
constexpr int kExitNumeric = 4;

constexpr std::uint64_t kDefaultSeed = 20260816ull;

// stream labels under the master seed, so each consumer is independent
constexpr std::uint64_t kStreamResiduals = 1;
constexpr std::uint64_t kStreamReplication = 2;

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct CommonArgs {
  std::string config_path;
  json config = json::object();

  std::string data_path;
  std::string family_name = "poisson";
  std::string response;
  std::vector<std::string> mean_covariates;
  std::vector<std::string> zero_covariates;
  std::uint64_t seed = kDefaultSeed;
  int max_iter = 500;
  std::string out_dir;
};

void load_config(CommonArgs& a) {
  if (a.config_path.empty()) return;
  std::ifstream in(a.config_path);
  if (!in) throw std::invalid_argument("cannot open config '" + a.config_path + "'");
  try {
    in >> a.config;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config '" + a.config_path + "': " + e.what());
  }
  if (!a.config.is_object())
    throw std::invalid_argument("config '" + a.config_path + "' must be a JSON object");
}

// flag > config > fallback
template <typename T>
void fill_from_config(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.contains(key)) return;
  try {
    value = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
  }
}

void fill_list_from_config(const CLI::Option* opt, const json& cfg, const char* key,
                           std::vector<std::string>& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.contains(key)) return;
  const json& v = cfg.at(key);
  if (v.is_string()) {
    value.clear();
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) value.push_back(item);
  } else if (v.is_array()) {
    value = v.get<std::vector<std::string>>();
  } else {
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be a string or an array of strings");
  }
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value, const json& cfg) {
  if (opt != nullptr && opt->count() > 0) return flag_value;
  if (cfg.contains("seed")) {
    try {
      return cfg.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("config key 'seed': ") + e.what());
    }
  }
  if (const char* env = std::getenv("RESIDUUM_SEED")) {
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("RESIDUUM_SEED='") + env +
                                  "' is not an unsigned integer");
    }
  }
  return kDefaultSeed;
}

struct LoadedData {
  residuum::Family family = residuum::Family::poisson;
  std::vector<int> y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  std::vector<std::string> mean_names;  // including the intercept
  std::vector<std::string> zero_names;
};

LoadedData load_data(const CommonArgs& a) {
  LoadedData d;
  d.family = residuum::parse_family(a.family_name);
  if (a.data_path.empty()) throw std::invalid_argument("--data is required");
  if (a.response.empty()) throw std::invalid_argument("--response is required");
  const residuum::Dataset ds = residuum::read_csv_file(a.data_path);
  d.y = residuum::to_counts(ds.column(a.response), a.response);
  for (const auto& c : a.mean_covariates)
    if (c == a.response)
      throw std::invalid_argument("response '" + c + "' cannot also be a covariate");
  d.X = residuum::design_matrix(ds, a.mean_covariates);
  d.mean_names.push_back("(intercept)");
  d.mean_names.insert(d.mean_names.end(), a.mean_covariates.begin(), a.mean_covariates.end());
  if (residuum::has_zero_inflation(d.family)) {
    d.Z = residuum::design_matrix(ds, a.zero_covariates);
    d.zero_names.push_back("(intercept)");
    d.zero_names.insert(d.zero_names.end(), a.zero_covariates.begin(), a.zero_covariates.end());
  } else if (!a.zero_covariates.empty()) {
    throw std::invalid_argument("--zero-covariates only applies to zip and zinb");
  }
  return d;
}

void print_fit(std::ostream& os, const residuum::FitResult& fit, const LoadedData& d) {
  os << "family: " << residuum::family_name(fit.family) << '\n';
  os << "observations: " << d.y.size() << '\n';
  os << "log-likelihood: " << fit.log_lik << '\n';
  os << "aic: " << fit.aic() << '\n';
  os << "converged: " << (fit.converged ? "yes" : "no") << " (" << fit.iterations
     << " iterations)\n";
  if (residuum::has_dispersion(fit.family)) {
    os << "dispersion k: " << fit.k << " (se of log k: " << fit.se_log_k << ")";
    if (fit.k_at_bound) os << "  [at bound]";
    os << '\n';
  }
  os << "mean model (log link):\n";
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
    os << "  " << d.mean_names[j] << "  " << fit.beta(j) << "  (se " << fit.se_beta(j) << ")\n";
  if (residuum::has_zero_inflation(fit.family)) {
    os << "zero model (logit link):\n";
    for (Eigen::Index j = 0; j < fit.gamma.size(); ++j)
      os << "  " << d.zero_names[j] << "  " << fit.gamma(j) << "  (se " << fit.se_gamma(j)
         << ")\n";
  }
}

// Flat key-value view of a fit; coefficient keys are "beta.<column>" and
// "gamma.<column>" with matching "se." entries.
ordered_json fit_report(const residuum::FitResult& fit, const LoadedData& d,
                        std::uint64_t seed) {
  ordered_json out;
  out["family"] = residuum::family_name(fit.family);
  out["observations"] = d.y.size();
  out["seed"] = seed;
  out["log_lik"] = fit.log_lik;
  out["aic"] = fit.aic();
  out["n_parameters"] = fit.n_parameters();
  out["converged"] = fit.converged;
  out["iterations"] = fit.iterations;
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
    out["beta." + d.mean_names[j]] = fit.beta(j);
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
    out["se.beta." + d.mean_names[j]] = fit.se_beta(j);
  if (residuum::has_zero_inflation(fit.family)) {
    for (Eigen::Index j = 0; j < fit.gamma.size(); ++j)
      out["gamma." + d.zero_names[j]] = fit.gamma(j);
    for (Eigen::Index j = 0; j < fit.gamma.size(); ++j)
      out["se.gamma." + d.zero_names[j]] = fit.se_gamma(j);
  }
  if (residuum::has_dispersion(fit.family)) {
    out["k"] = fit.k;
    out["k_at_bound"] = fit.k_at_bound;
    out["se.log_k"] = fit.se_log_k;
  }
  return out;
}

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
  std::filesystem::path p(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::invalid_argument("cannot create output directory '" + out_dir + "'");
  return p;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path.string() + "'");
  out << content;
}

// Covariate columns for the residual CSV: mean-model columns first, then
// any zero-model columns not already present.
void gather_covariates(const LoadedData& d, std::vector<std::string>& names,
                       std::vector<std::vector<double>>& cols) {
  auto add = [&](const std::string& name, const Eigen::MatrixXd& M, Eigen::Index j) {
    for (const auto& seen : names)
      if (seen == name) return;
    names.push_back(name);
    cols.emplace_back(M.col(j).data(), M.col(j).data() + M.rows());
  };
  for (std::size_t j = 1; j < d.mean_names.size(); ++j)
    add(d.mean_names[j], d.X, static_cast<Eigen::Index>(j));
  for (std::size_t j = 1; j < d.zero_names.size(); ++j)
    add(d.zero_names[j], d.Z, static_cast<Eigen::Index>(j));
}

template <typename Dist>
int diagnose_with(const residuum::FitResult& fit, const std::vector<Dist>& laws,
                  const LoadedData& d, std::uint64_t seed, int replicates, double alpha,
                  const std::string& out_dir) {
  residuum::Stream res_stream = residuum::Stream::derive(seed, {kStreamResiduals});
  const residuum::ResidualTable table = residuum::compute_residuals(laws, d.y, res_stream);
  const residuum::AggregateStats agg = residuum::aggregate_stats(table);

  const residuum::GofResult sw_nrpp = residuum::shapiro_wilk(table.nrpp);
  const residuum::GofResult ks_rpp = residuum::ks_uniform(table.rpp);
  const residuum::GofResult sw_nmpp = residuum::shapiro_wilk(table.nmpp);
  const residuum::GofResult sw_pearson = residuum::shapiro_wilk(table.pearson);
  const residuum::GofResult sw_deviance = residuum::shapiro_wilk(table.deviance);

  const residuum::ReplicatedSwResult rep = residuum::replicated_shapiro(
      laws, d.y, replicates, residuum::derive_seed(seed, {kStreamReplication}));

  std::cout << "fit: family=" << residuum::family_name(fit.family) << " n=" << d.y.size()
            << " log_lik=" << fit.log_lik << " aic=" << fit.aic() << '\n';
  std::cout << "seed: " << seed << '\n';
  std::cout << "normal-score diagnostics:\n";
  std::cout << "  shapiro-wilk on nrpp:     W=" << sw_nrpp.statistic << " p=" << sw_nrpp.p_value
            << '\n';
  std::cout << "  ks uniformity of rpp:     D=" << ks_rpp.statistic << " p=" << ks_rpp.p_value
            << '\n';
  std::cout << "reference residuals:\n";
  std::cout << "  shapiro-wilk on nmpp:     W=" << sw_nmpp.statistic << " p=" << sw_nmpp.p_value
            << '\n';
  std::cout << "  shapiro-wilk on pearson:  W=" << sw_pearson.statistic
            << " p=" << sw_pearson.p_value << '\n';
  std::cout << "  shapiro-wilk on deviance: W=" << sw_deviance.statistic
            << " p=" << sw_deviance.p_value << '\n';
  std::cout << "aggregate statistics: X2=" << agg.pearson_chi2 << " D=" << agg.deviance << '\n';
  std::cout << "replicated shapiro-wilk (" << replicates << " replicates, alpha=" << alpha
            << "):\n";
  std::cout << "  fraction above alpha: " << rep.fraction_above(alpha) << '\n';
  std::cout << "  median p-value: " << rep.median() << '\n';

  if (!out_dir.empty()) {
    const std::filesystem::path dir = prepare_out_dir(out_dir);

    std::vector<std::string> cov_names;
    std::vector<std::vector<double>> cov_cols;
    gather_covariates(d, cov_names, cov_cols);
    std::vector<double> fitted(laws.size());
    for (std::size_t i = 0; i < laws.size(); ++i) fitted[i] = laws[i].mean();

    std::ostringstream res_os;
    residuum::write_residual_csv(res_os, d.y, fitted, cov_names, cov_cols, table);
    write_text_file(dir / "residuals.csv", res_os.str());

    std::ostringstream qq_os;
    residuum::write_qq_csv(qq_os, table);
    write_text_file(dir / "qq.csv", qq_os.str());

    std::ostringstream rep_os;
    rep_os << "replicate,p_value\n" << std::setprecision(17);
    for (std::size_t r = 0; r < rep.p_values.size(); ++r)
      rep_os << (r + 1) << ',' << rep.p_values[r] << '\n';
    write_text_file(dir / "replicated_pvalues.csv", rep_os.str());

    ordered_json report = fit_report(fit, d, seed);
    report["alpha"] = alpha;
    report["sw_nrpp.statistic"] = sw_nrpp.statistic;
    report["sw_nrpp.p_value"] = sw_nrpp.p_value;
    report["ks_rpp.statistic"] = ks_rpp.statistic;
    report["ks_rpp.p_value"] = ks_rpp.p_value;
    report["sw_nmpp.statistic"] = sw_nmpp.statistic;
    report["sw_nmpp.p_value"] = sw_nmpp.p_value;
    report["sw_pearson.statistic"] = sw_pearson.statistic;
    report["sw_pearson.p_value"] = sw_pearson.p_value;
    report["sw_deviance.statistic"] = sw_deviance.statistic;
    report["sw_deviance.p_value"] = sw_deviance.p_value;
    report["aggregate.pearson_chi2"] = agg.pearson_chi2;
    report["aggregate.deviance"] = agg.deviance;
    report["replicated_sw.replicates"] = replicates;
    report["replicated_sw.fraction_above_alpha"] = rep.fraction_above(alpha);
    report["replicated_sw.median_p_value"] = rep.median();
    write_text_file(dir / "diagnostic_report.json", report.dump(2) + "\n");

    std::cout << "artifacts written to " << dir.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized predictive p-value diagnostics for count regression"};
  app.require_subcommand(1);

  CommonArgs fit_args, diag_args;

  // ---- fit ----
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a count regression model");
  fit_cmd->add_option("--config", fit_args.config_path, "JSON file with default options");
  fit_cmd->add_option("--data", fit_args.data_path, "CSV file with header row");
  fit_cmd->add_option("--response", fit_args.response, "response column (nonnegative counts)");
  auto* fit_family = fit_cmd->add_option("--family", fit_args.family_name,
                                         "poisson | negbin | zip | zinb");
  auto* fit_mean = fit_cmd
                       ->add_option("--mean-covariates", fit_args.mean_covariates,
                                    "mean model covariate columns (intercept is implicit)")
                       ->delimiter(',');
  auto* fit_zero = fit_cmd
                       ->add_option("--zero-covariates", fit_args.zero_covariates,
                                    "zero model covariate columns (zip/zinb)")
                       ->delimiter(',');
  auto* fit_seed = fit_cmd->add_option("--seed", fit_args.seed, "master seed (echoed in report)");
  auto* fit_iter = fit_cmd->add_option("--max-iter", fit_args.max_iter,
                                       "fitting iteration budget (default 500)");
  auto* fit_out = fit_cmd->add_option("--out", fit_args.out_dir,
                                      "directory for fit_report.json");

  // ---- diagnose ----
  int replicates = 1000;
  double alpha = 0.05;
  CLI::App* diag_cmd =
      app.add_subcommand("diagnose", "Fit, then test the predictive p-value residuals");
  diag_cmd->add_option("--config", diag_args.config_path, "JSON file with default options");
  diag_cmd->add_option("--data", diag_args.data_path, "CSV file with header row");
  diag_cmd->add_option("--response", diag_args.response, "response column (nonnegative counts)");
  auto* diag_family = diag_cmd->add_option("--family", diag_args.family_name,
                                           "poisson | negbin | zip | zinb");
  auto* diag_mean = diag_cmd
                        ->add_option("--mean-covariates", diag_args.mean_covariates,
                                     "mean model covariate columns (intercept is implicit)")
                        ->delimiter(',');
  auto* diag_zero = diag_cmd
                        ->add_option("--zero-covariates", diag_args.zero_covariates,
                                     "zero model covariate columns (zip/zinb)")
                        ->delimiter(',');
  auto* diag_seed = diag_cmd->add_option("--seed", diag_args.seed, "master seed");
  auto* diag_iter = diag_cmd->add_option("--max-iter", diag_args.max_iter,
                                         "fitting iteration budget (default 500)");
  auto* diag_reps = diag_cmd->add_option("--replicates", replicates,
                                         "replicated shapiro-wilk draws (default 1000)");
  auto* diag_alpha = diag_cmd->add_option("--alpha", alpha, "test level (default 0.05)");
  auto* diag_out = diag_cmd->add_option(
      "--out", diag_args.out_dir,
      "directory for residuals.csv, qq.csv, replicated_pvalues.csv, diagnostic_report.json");

  // ---- simulate ----
  std::string scenario_str;
  std::vector<int> sizes;
  std::vector<double> levels;
  int sim_replicates = 500;
  double sim_alpha = 0.05;
  std::uint64_t sim_seed = kDefaultSeed;
  std::string sim_out, sim_config_path;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Monte-Carlo size and power of the diagnostics under a scenario");
  sim_cmd->add_option("--config", sim_config_path, "JSON file with default options");
  auto* sim_scn =
      sim_cmd->add_option("--scenario", scenario_str,
                          "finite_pmf | sine_poisson | nb_quadratic | nb_dispersion | "
                          "zip_excess_zeros");
  auto* sim_sizes =
      sim_cmd->add_option("--sizes", sizes, "sample sizes (default 20..1000 grid)")
          ->delimiter(',');
  auto* sim_levels =
      sim_cmd->add_option("--levels", levels, "scenario strength levels (default: all)")
          ->delimiter(',');
  auto* sim_reps =
      sim_cmd->add_option("--replicates", sim_replicates, "datasets per cell (default 500)");
  auto* sim_alpha_opt = sim_cmd->add_option("--alpha", sim_alpha, "test level (default 0.05)");
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "master seed");
  auto* sim_out_opt =
      sim_cmd->add_option("--out", sim_out, "directory for power.csv and cells.log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (fit_cmd->parsed()) {
      load_config(fit_args);
      fill_from_config(nullptr, fit_args.config, "data", fit_args.data_path);
      fill_from_config(nullptr, fit_args.config, "response", fit_args.response);
      fill_from_config(fit_family, fit_args.config, "family", fit_args.family_name);
      fill_list_from_config(fit_mean, fit_args.config, "mean-covariates",
                            fit_args.mean_covariates);
      fill_list_from_config(fit_zero, fit_args.config, "zero-covariates",
                            fit_args.zero_covariates);
      fill_from_config(fit_iter, fit_args.config, "max-iter", fit_args.max_iter);
      fill_from_config(fit_out, fit_args.config, "out", fit_args.out_dir);
      const std::uint64_t seed = resolve_seed(fit_seed, fit_args.seed, fit_args.config);
      if (fit_args.max_iter < 1) throw std::invalid_argument("--max-iter must be >= 1");

      const LoadedData d = load_data(fit_args);
      residuum::FitOptions opts;
      opts.max_iter = fit_args.max_iter;
      const residuum::FitResult fit = residuum::fit_model(d.family, d.X, d.Z, d.y, opts);
      print_fit(std::cout, fit, d);
      if (!fit_args.out_dir.empty()) {
        const std::filesystem::path dir = prepare_out_dir(fit_args.out_dir);
        write_text_file(dir / "fit_report.json", fit_report(fit, d, seed).dump(2) + "\n");
        std::cout << "report written to " << (dir / "fit_report.json").string() << '\n';
      }
      if (!fit.converged) {
        std::cerr << "error: fit did not converge within the iteration limit\n";
        return kExitNoConverge;
      }
      return kExitOk;
    }

    if (diag_cmd->parsed()) {
      load_config(diag_args);
      fill_from_config(nullptr, diag_args.config, "data", diag_args.data_path);
      fill_from_config(nullptr, diag_args.config, "response", diag_args.response);
      fill_from_config(diag_family, diag_args.config, "family", diag_args.family_name);
      fill_list_from_config(diag_mean, diag_args.config, "mean-covariates",
                            diag_args.mean_covariates);
      fill_list_from_config(diag_zero, diag_args.config, "zero-covariates",
                            diag_args.zero_covariates);
      fill_from_config(diag_iter, diag_args.config, "max-iter", diag_args.max_iter);
      fill_from_config(diag_reps, diag_args.config, "replicates", replicates);
      fill_from_config(diag_alpha, diag_args.config, "alpha", alpha);
      fill_from_config(diag_out, diag_args.config, "out", diag_args.out_dir);
      const std::uint64_t seed = resolve_seed(diag_seed, diag_args.seed, diag_args.config);
      if (diag_args.max_iter < 1) throw std::invalid_argument("--max-iter must be >= 1");
      if (replicates < 1) throw std::invalid_argument("--replicates must be >= 1");
      if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("--alpha must be in (0,1)");

      const LoadedData d = load_data(diag_args);
      residuum::FitOptions opts;
      opts.max_iter = diag_args.max_iter;
      const residuum::FitResult fit = residuum::fit_model(d.family, d.X, d.Z, d.y, opts);
      if (!fit.converged) {
        std::cerr << "error: fit did not converge within the iteration limit\n";
        return kExitNoConverge;
      }
      switch (d.family) {
        case residuum::Family::poisson:
          return diagnose_with(fit, residuum::poisson_laws(d.X, fit.beta), d, seed, replicates,
                               alpha, diag_args.out_dir);
        case residuum::Family::negbin:
          return diagnose_with(fit, residuum::negbin_laws(d.X, fit.beta, fit.k), d, seed,
                               replicates, alpha, diag_args.out_dir);
        case residuum::Family::zip:
          return diagnose_with(fit, residuum::zip_laws(d.X, d.Z, fit.beta, fit.gamma), d, seed,
                               replicates, alpha, diag_args.out_dir);
        case residuum::Family::zinb:
          return diagnose_with(fit, residuum::zinb_laws(d.X, d.Z, fit.beta, fit.gamma, fit.k),
                               d, seed, replicates, alpha, diag_args.out_dir);
      }
      throw std::invalid_argument("unknown family");
    }

    // simulate
    {
      json cfg = json::object();
      if (!sim_config_path.empty()) {
        CommonArgs tmp;
        tmp.config_path = sim_config_path;
        load_config(tmp);
        cfg = tmp.config;
      }
      fill_from_config(sim_scn, cfg, "scenario", scenario_str);
      fill_from_config(sim_sizes, cfg, "sizes", sizes);
      fill_from_config(sim_levels, cfg, "levels", levels);
      fill_from_config(sim_reps, cfg, "replicates", sim_replicates);
      fill_from_config(sim_alpha_opt, cfg, "alpha", sim_alpha);
      fill_from_config(sim_out_opt, cfg, "out", sim_out);
      const std::uint64_t seed = resolve_seed(sim_seed_opt, sim_seed, cfg);
      if (scenario_str.empty()) throw std::invalid_argument("--scenario is required");
      if (sim_replicates < 1) throw std::invalid_argument("--replicates must be >= 1");
      if (!(sim_alpha > 0.0 && sim_alpha < 1.0))
        throw std::invalid_argument("--alpha must be in (0,1)");
      const residuum::Scenario scenario = residuum::parse_scenario(scenario_str);
      if (sizes.empty()) sizes = residuum::default_sample_sizes();

      const std::vector<residuum::PowerCell> cells =
          residuum::run_power_study(scenario, sizes, levels, sim_replicates, sim_alpha, seed);

      std::ostringstream log;
      log << "scenario " << residuum::scenario_name(scenario) << ", " << sim_replicates
          << " replicates per cell, alpha=" << sim_alpha << ", seed=" << seed << '\n';
      for (const auto& c : cells) {
        log << "  n=" << c.n << " level=" << c.level << "  size(sw nrpp)=" << c.true_sw_nrpp
            << "  power(sw nrpp)=" << c.wrong_sw_nrpp << "  failures=" << c.failures;
        if (!c.valid) log << "  [invalid: too many failures]";
        log << '\n';
      }
      std::cout << log.str();
      if (!sim_out.empty()) {
        const std::filesystem::path dir = prepare_out_dir(sim_out);
        std::ostringstream os;
        residuum::write_power_csv(os, cells, seed);
        write_text_file(dir / "power.csv", os.str());
        write_text_file(dir / "cells.log", log.str());
        std::cout << "power table written to " << (dir / "power.csv").string() << '\n';
      }
      return kExitOk;
    }
  } catch (const residuum::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
