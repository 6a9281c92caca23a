#include "residuum/io.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "residuum/distributions.hpp"
#include "residuum/residuals.hpp"
#include "residuum/rng.hpp"
#include "residuum/simlab.hpp"

using namespace residuum;

namespace {

// message produced by a callable expected to throw invalid_argument
template <typename Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected std::invalid_argument";
  return {};
}

}  // namespace

TEST(ReadCsv, ColumnOrientedLayout) {
  std::istringstream in("y,x1,x2\n1,0.5,-2\n4,1.5,3.25\n0,2.5,0\n");
  const Dataset ds = read_csv(in);
  ASSERT_EQ(ds.columns, (std::vector<std::string>{"y", "x1", "x2"}));
  ASSERT_EQ(ds.n_rows(), 3u);
  EXPECT_EQ(ds.data[0], (std::vector<double>{1, 4, 0}));
  EXPECT_EQ(ds.data[1], (std::vector<double>{0.5, 1.5, 2.5}));
  EXPECT_EQ(ds.column("x2"), (std::vector<double>{-2, 3.25, 0}));
  EXPECT_TRUE(ds.has_column("x1"));
  EXPECT_FALSE(ds.has_column("x3"));
  EXPECT_THROW(ds.column("x3"), std::invalid_argument);
}

TEST(ReadCsv, ToleratesPaddingAndBlankLines) {
  std::istringstream in("y , x\r\n 1 ,2\n\n3, 4 \r\n");
  const Dataset ds = read_csv(in);
  EXPECT_EQ(ds.columns, (std::vector<std::string>{"y", "x"}));
  ASSERT_EQ(ds.n_rows(), 2u);
  EXPECT_EQ(ds.data[1], (std::vector<double>{2, 4}));
}

// Every malformed input must name the offending location.
TEST(ReadCsv, ErrorsNameTheOffendingLine) {
  {
    std::istringstream in("");
    EXPECT_NE(error_of([&] { read_csv(in, "t.csv"); }).find("empty input"), std::string::npos);
  }
  {
    std::istringstream in("y,\n1,2\n");
    EXPECT_NE(error_of([&] { read_csv(in); }).find("empty column name"), std::string::npos);
  }
  {
    std::istringstream in("y,y\n1,2\n");
    EXPECT_NE(error_of([&] { read_csv(in); }).find("duplicate column 'y'"), std::string::npos);
  }
  {
    std::istringstream in("y,x\n1,2\n3\n");
    const std::string msg = error_of([&] { read_csv(in, "t.csv"); });
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("t.csv"), std::string::npos) << msg;
  }
  {
    std::istringstream in("y,x\n1,2\n3,abc\n");
    const std::string msg = error_of([&] { read_csv(in); });
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'abc'"), std::string::npos) << msg;
  }
  {
    std::istringstream in("y,x\n1,\n");
    EXPECT_NE(error_of([&] { read_csv(in); }).find("row 2"), std::string::npos);
  }
  {
    std::istringstream in("y,x\n");
    EXPECT_NE(error_of([&] { read_csv(in); }).find("no data rows"), std::string::npos);
  }
  EXPECT_NE(error_of([] { read_csv_file("/no/such/file.csv"); }).find("/no/such/file.csv"),
            std::string::npos);
}

TEST(ToCounts, AcceptsIntegersRejectsTheRest) {
  EXPECT_EQ(to_counts({0.0, 3.0, 12.0}, "y"), (std::vector<int>{0, 3, 12}));
  // exact integral doubles only
  const std::string frac = error_of([] { to_counts({1.0, 2.5}, "y"); });
  EXPECT_NE(frac.find("row 3"), std::string::npos) << frac;
  EXPECT_NE(error_of([] { to_counts({-1.0}, "y"); }).find("nonnegative"), std::string::npos);
  EXPECT_THROW(to_counts({std::nan("")}, "y"), std::invalid_argument);
}

TEST(DesignMatrix, InterceptFirstThenNamedColumns) {
  std::istringstream in("y,a,b\n1,10,100\n2,20,200\n");
  const Dataset ds = read_csv(in);
  const Eigen::MatrixXd X = design_matrix(ds, {"b", "a"});
  ASSERT_EQ(X.rows(), 2);
  ASSERT_EQ(X.cols(), 3);
  EXPECT_EQ(X(0, 0), 1.0);
  EXPECT_EQ(X(1, 0), 1.0);
  EXPECT_EQ(X(0, 1), 100.0);
  EXPECT_EQ(X(1, 1), 200.0);
  EXPECT_EQ(X(0, 2), 10.0);
  EXPECT_THROW(design_matrix(ds, {"c"}), std::invalid_argument);

  const Eigen::MatrixXd intercept_only = design_matrix(ds, {});
  EXPECT_EQ(intercept_only.cols(), 1);
}

namespace {

ResidualTable small_table() {
  std::vector<Poisson> laws = {Poisson(1.0), Poisson(2.0), Poisson(3.0), Poisson(4.0)};
  std::vector<int> y = {1, 0, 4, 3};
  Stream u = Stream::derive(2, {0});
  return compute_residuals(laws, y, u);
}

}  // namespace

TEST(WriteResidualCsv, HeaderAndRoundTrip) {
  const ResidualTable t = small_table();
  const std::vector<int> y = {1, 0, 4, 3};
  const std::vector<double> mu = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4};

  std::ostringstream os;
  write_residual_csv(os, y, mu, {"x"}, {x}, t);
  std::istringstream in(os.str());
  const Dataset back = read_csv(in);
  EXPECT_EQ(back.columns,
            (std::vector<std::string>{"index", "y", "fitted_value", "x", "rpp", "nrpp", "mpp",
                                      "nmpp", "pearson", "deviance"}));
  ASSERT_EQ(back.n_rows(), 4u);
  EXPECT_EQ(back.column("index")[0], 1.0);
  EXPECT_EQ(back.column("index")[3], 4.0);
  for (int i = 0; i < 4; ++i) {
    // 17 significant digits round-trip doubles exactly
    EXPECT_EQ(back.column("rpp")[i], t.rpp[i]);
    EXPECT_EQ(back.column("nrpp")[i], t.nrpp[i]);
    EXPECT_EQ(back.column("pearson")[i], t.pearson[i]);
    EXPECT_EQ(back.column("y")[i], y[i]);
  }

  std::ostringstream bad;
  EXPECT_THROW(write_residual_csv(bad, y, {1.0}, {"x"}, {x}, t), std::invalid_argument);
  EXPECT_THROW(write_residual_csv(bad, y, mu, {"x"}, {{0.1}}, t), std::invalid_argument);
  EXPECT_THROW(write_residual_csv(bad, y, mu, {"x", "z"}, {x}, t), std::invalid_argument);
}

TEST(WriteQqCsv, SortedColumnsAgainstPlottingPositions) {
  const ResidualTable t = small_table();
  std::ostringstream os;
  write_qq_csv(os, t);
  std::istringstream in(os.str());
  const Dataset back = read_csv(in);
  EXPECT_EQ(back.columns, (std::vector<std::string>{"index", "position", "theoretical", "nrpp",
                                                    "nmpp", "pearson", "deviance"}));
  ASSERT_EQ(back.n_rows(), 4u);
  const auto& pos = back.column("position");
  const auto& nrpp = back.column("nrpp");
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(pos[i], (i + 1 - 0.375) / 4.25, 1e-15);
    if (i > 0) EXPECT_GE(nrpp[i], nrpp[i - 1]);
  }
  std::vector<double> want = t.nrpp;
  std::sort(want.begin(), want.end());
  for (int i = 0; i < 4; ++i) EXPECT_EQ(nrpp[i], want[i]);

  std::ostringstream bad;
  EXPECT_THROW(write_qq_csv(bad, ResidualTable{}), std::invalid_argument);
}

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

TEST(WritePowerCsv, LongFormatSkipsUndefinedKinds) {
  PowerCell c;
  c.scenario = Scenario::finite_pmf;
  c.n = 100;
  c.level = 0.0;
  c.replicates = 50;
  c.failures = 1;
  c.valid = true;
  c.true_sw_nrpp = 0.25;
  c.true_sw_nmpp = 0.9;
  c.true_sw_pearson = 0.88;
  c.true_ks_rpp = 0.0625;
  c.wrong_sw_nrpp = 0.75;
  c.wrong_ks_rpp = 0.5;
  // true_sw_deviance stays NaN: the table law defines no deviance

  std::ostringstream os;
  write_power_csv(os, {c}, 42);
  const std::vector<std::string> lines = lines_of(os.str());
  ASSERT_EQ(lines.size(), 7u);  // header + 7 kinds minus the missing deviance
  EXPECT_EQ(lines[0], "scenario,kind,n,level,model_form,rejection_rate,reps,failures,seed");
  EXPECT_EQ(lines[1], "finite_pmf,nrpp,100,0,true,0.25,50,1,42");
  EXPECT_EQ(lines[4], "finite_pmf,rpp,100,0,true,0.0625,50,1,42");
  EXPECT_EQ(lines[5], "finite_pmf,nrpp,100,0,wrong,0.75,50,1,42");
  EXPECT_EQ(lines[6], "finite_pmf,rpp,100,0,wrong,0.5,50,1,42");
  EXPECT_EQ(os.str().find("deviance"), std::string::npos);
}

TEST(WritePowerCsv, ScenarioAndKindAreText) {
  PowerCell c;
  c.scenario = Scenario::nb_dispersion;
  c.n = 50;
  c.level = 2.0;
  c.replicates = 10;
  c.true_sw_nrpp = 0.5;
  std::ostringstream os;
  write_power_csv(os, {c}, 7);
  const std::vector<std::string> lines = lines_of(os.str());
  ASSERT_EQ(lines.size(), 2u);  // only the one defined rate produces a row
  EXPECT_EQ(lines[1], "nb_dispersion,nrpp,50,2,true,0.5,10,0,7");
}
