// CSV input and output.  Input files are plain numeric CSV with a header
// row; fields may not be quoted or empty.  Output uses 17 significant
// digits so values round-trip through text.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "residuum/residuals.hpp"
#include "residuum/simlab.hpp"

namespace residuum {

// Column-oriented numeric table.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[j] is the column named columns[j]

  std::size_t n_rows() const { return data.empty() ? 0 : data[0].size(); }

  bool has_column(const std::string& name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j] == name) return data[j];
    throw std::invalid_argument("no column named '" + name + "'");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  // trim surrounding spaces
  for (auto& f : fields) {
    std::size_t b = f.find_first_not_of(" \t");
    std::size_t e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

inline double parse_double(const std::string& s, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("row " + std::to_string(row) + ", column '" + col +
                                "': cannot parse '" + s + "' as a number");
  return v;
}

}  // namespace detail

inline Dataset read_csv(std::istream& in, const std::string& origin = "<stream>") {
  Dataset ds;
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(origin + ": empty input");
  ds.columns = detail::split_csv_line(line);
  for (const auto& c : ds.columns)
    if (c.empty()) throw std::invalid_argument(origin + ": empty column name in header");
  for (std::size_t a = 0; a < ds.columns.size(); ++a)
    for (std::size_t b = a + 1; b < ds.columns.size(); ++b)
      if (ds.columns[a] == ds.columns[b])
        throw std::invalid_argument(origin + ": duplicate column '" + ds.columns[a] + "'");
  ds.data.assign(ds.columns.size(), {});

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != ds.columns.size())
      throw std::invalid_argument(origin + ": row " + std::to_string(row) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(ds.columns.size()));
    for (std::size_t j = 0; j < fields.size(); ++j)
      ds.data[j].push_back(detail::parse_double(fields[j], row, ds.columns[j]));
  }
  if (ds.n_rows() == 0) throw std::invalid_argument(origin + ": no data rows");
  return ds;
}

inline Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return read_csv(in, path);
}

// Integer counts from a numeric column; rejects negatives and non-integers.
inline std::vector<int> to_counts(const std::vector<double>& col, const std::string& name) {
  std::vector<int> y;
  y.reserve(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    const double v = col[i];
    const double r = std::round(v);
    if (!std::isfinite(v) || std::abs(v - r) > 1e-9 || r < 0.0)
      throw std::invalid_argument("column '" + name + "', row " + std::to_string(i + 2) +
                                  ": value " + std::to_string(v) +
                                  " is not a nonnegative integer");
    y.push_back(static_cast<int>(r));
  }
  return y;
}

// Design matrix [1, covariates...] in the order given.
inline Eigen::MatrixXd design_matrix(const Dataset& ds,
                                     const std::vector<std::string>& covariates) {
  const std::size_t n = ds.n_rows();
  Eigen::MatrixXd X(n, covariates.size() + 1);
  X.col(0).setOnes();
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const std::vector<double>& col = ds.column(covariates[j]);
    for (std::size_t i = 0; i < n; ++i) X(i, j + 1) = col[i];
  }
  return X;
}

// Per-observation plot data: 1-based index, observed response, fitted mean,
// the covariate columns used in the fit, then one column per residual kind.
inline void write_residual_csv(std::ostream& os, const std::vector<int>& y,
                               const std::vector<double>& fitted_mean,
                               const std::vector<std::string>& covariate_names,
                               const std::vector<std::vector<double>>& covariate_cols,
                               const ResidualTable& t) {
  const std::size_t n = y.size();
  if (fitted_mean.size() != n || t.rpp.size() != n)
    throw std::invalid_argument("write_residual_csv: column lengths differ");
  if (covariate_names.size() != covariate_cols.size())
    throw std::invalid_argument("write_residual_csv: covariate names and columns differ");
  for (const auto& col : covariate_cols)
    if (col.size() != n) throw std::invalid_argument("write_residual_csv: ragged covariate");

  os << "index,y,fitted_value";
  for (const auto& name : covariate_names) os << ',' << name;
  os << ",rpp,nrpp,mpp,nmpp,pearson,deviance\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    os << (i + 1) << ',' << y[i] << ',' << fitted_mean[i];
    for (const auto& col : covariate_cols) os << ',' << col[i];
    os << ',' << t.rpp[i] << ',' << t.nrpp[i] << ',' << t.mpp[i] << ',' << t.nmpp[i] << ','
       << t.pearson[i] << ',' << t.deviance[i] << '\n';
  }
}

// Normal QQ plot data: row i holds the plotting position (i - 0.375)/(n + 0.25),
// its standard normal quantile, and the i-th order statistic of each
// normal-scale residual kind (columns sorted independently).
inline void write_qq_csv(std::ostream& os, const ResidualTable& t) {
  const std::size_t n = t.nrpp.size();
  if (n == 0) throw std::invalid_argument("write_qq_csv: empty residual table");
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const std::vector<double> nrpp = sorted(t.nrpp);
  const std::vector<double> nmpp = sorted(t.nmpp);
  const std::vector<double> pearson = sorted(t.pearson);
  const std::vector<double> deviance = sorted(t.deviance);
  os << "index,position,theoretical,nrpp,nmpp,pearson,deviance\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (i + 1 - 0.375) / (n + 0.25);
    os << (i + 1) << ',' << pos << ',' << std_normal_quantile(pos) << ',' << nrpp[i] << ','
       << nmpp[i] << ',' << pearson[i] << ',' << deviance[i] << '\n';
  }
}

// Long-format rejection-rate table, one row per (cell, residual kind, model
// form).  The test behind a row follows from the kind: Shapiro-Wilk for the
// normal-scale kinds, KS-uniform for rpp.  Kinds a cell does not define
// (deviance under the table law, or anything when every replicate failed)
// are omitted rather than written as NaN.
inline void write_power_csv(std::ostream& os, const std::vector<PowerCell>& cells,
                            std::uint64_t master_seed) {
  os << "scenario,kind,n,level,model_form,rejection_rate,reps,failures,seed\n";
  os << std::setprecision(17);
  auto row = [&](const PowerCell& c, const char* kind, const char* form, double rate) {
    if (std::isnan(rate)) return;
    os << scenario_name(c.scenario) << ',' << kind << ',' << c.n << ',' << c.level << ',' << form
       << ',' << rate << ',' << c.replicates << ',' << c.failures << ',' << master_seed << '\n';
  };
  for (const PowerCell& c : cells) {
    row(c, "nrpp", "true", c.true_sw_nrpp);
    row(c, "nmpp", "true", c.true_sw_nmpp);
    row(c, "pearson", "true", c.true_sw_pearson);
    row(c, "deviance", "true", c.true_sw_deviance);
    row(c, "rpp", "true", c.true_ks_rpp);
    row(c, "nrpp", "wrong", c.wrong_sw_nrpp);
    row(c, "rpp", "wrong", c.wrong_ks_rpp);
  }
}

}  // namespace residuum
