#include "residuum/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "residuum/gof.hpp"
#include "residuum/rng.hpp"

using namespace residuum;

TEST(ScenarioMeta, NamesLevelsRoundTrip) {
  for (Scenario s : all_scenarios()) {
    EXPECT_EQ(parse_scenario(scenario_name(s)), s);
    EXPECT_FALSE(scenario_levels(s).empty());
  }
  EXPECT_THROW(parse_scenario("no_such_scenario"), std::invalid_argument);
  EXPECT_EQ(default_sample_sizes(), (std::vector<int>{20, 50, 100, 200, 400, 600, 800, 1000}));
}

TEST(GenerateScenario, ShapesAndRanges) {
  const int n = 500;
  const ScenarioData table = generate_scenario(Scenario::finite_pmf, n, 0.0, 77);
  EXPECT_TRUE(table.x.empty());
  ASSERT_EQ(table.y.size(), static_cast<std::size_t>(n));
  for (int v : table.y) {
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 2);
  }

  const ScenarioData sine = generate_scenario(Scenario::sine_poisson, n, 0.0, 77);
  ASSERT_EQ(sine.x.size(), static_cast<std::size_t>(n));
  for (double v : sine.x) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 2.0 * std::numbers::pi);
  }

  const ScenarioData disp = generate_scenario(Scenario::nb_dispersion, n, 2.0, 77);
  for (double v : disp.x) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 2.0);
  }
  for (int v : disp.y) EXPECT_GE(v, 0);

  EXPECT_THROW(generate_scenario(Scenario::finite_pmf, 0, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(generate_scenario(Scenario::nb_quadratic, 50, 0.3, 1), std::invalid_argument);
  EXPECT_THROW(generate_scenario(Scenario::zip_excess_zeros, 50, 0.0, 1), std::invalid_argument);
}

TEST(GenerateScenario, SeededDeterminism) {
  const ScenarioData a = generate_scenario(Scenario::nb_quadratic, 300, 1.0, 123);
  const ScenarioData b = generate_scenario(Scenario::nb_quadratic, 300, 1.0, 123);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  const ScenarioData c = generate_scenario(Scenario::nb_quadratic, 300, 1.0, 124);
  EXPECT_NE(a.y, c.y);

  // the stream overload and the explicit phase streams agree
  Stream cov = Stream::derive(123, {0});
  Stream resp = Stream::derive(123, {1});
  const ScenarioData d = generate_scenario(Scenario::nb_quadratic, 300, 1.0, cov, resp);
  EXPECT_EQ(a.x, d.x);
  EXPECT_EQ(a.y, d.y);
}

// Excess-zero scenario: the zero fraction should clearly exceed what the
// Poisson part alone would produce on average.
TEST(GenerateScenario, ZipLevelControlsZeroFraction) {
  const int n = 4000;
  auto zero_frac = [n](double level) {
    const ScenarioData d = generate_scenario(Scenario::zip_excess_zeros, n, level, 31);
    int z = 0;
    for (int v : d.y) z += (v == 0);
    return static_cast<double>(z) / n;
  };
  const double f1 = zero_frac(0.1);
  const double f3 = zero_frac(0.3);
  const double f5 = zero_frac(0.5);
  EXPECT_LT(f1, f3);
  EXPECT_LT(f3, f5);
  // P(y=0) = p + (1-p) q with q = E[exp(-e^{1+2x})] ~= 0.127 over x~U(-1,2),
  // so the gap between levels 0.5 and 0.1 is 0.4 (1 - q) ~= 0.35
  EXPECT_NEAR(f5 - f1, 0.35, 0.03);
}

TEST(RunPowerCell, ArgumentValidation) {
  EXPECT_THROW(run_power_cell(Scenario::finite_pmf, 2, 0.0, 10, 0.05, 1), std::invalid_argument);
  EXPECT_THROW(run_power_cell(Scenario::finite_pmf, 100, 0.0, 0, 0.05, 1), std::invalid_argument);
  EXPECT_THROW(run_power_cell(Scenario::finite_pmf, 100, 0.0, 10, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(run_power_cell(Scenario::finite_pmf, 100, 0.0, 10, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(run_power_cell(Scenario::nb_dispersion, 100, 3.0, 10, 0.05, 1),
               std::invalid_argument);
}

TEST(RunPowerCell, DeterministicForFixedSeed) {
  const PowerCell a = run_power_cell(Scenario::finite_pmf, 150, 0.0, 40, 0.05, 42);
  const PowerCell b = run_power_cell(Scenario::finite_pmf, 150, 0.0, 40, 0.05, 42);
  EXPECT_EQ(a.true_sw_nrpp, b.true_sw_nrpp);
  EXPECT_EQ(a.true_sw_nmpp, b.true_sw_nmpp);
  EXPECT_EQ(a.true_sw_pearson, b.true_sw_pearson);
  EXPECT_EQ(a.true_ks_rpp, b.true_ks_rpp);
  EXPECT_EQ(a.wrong_sw_nrpp, b.wrong_sw_nrpp);
  EXPECT_EQ(a.wrong_ks_rpp, b.wrong_ks_rpp);
  EXPECT_EQ(a.failures, b.failures);
  EXPECT_TRUE(a.valid);
  EXPECT_EQ(a.replicates, 40);
  // table law defines no deviance residual
  EXPECT_TRUE(std::isnan(a.true_sw_deviance));
}

// finite_pmf involves no fitting, so the size of the randomized tests can
// be pinned fairly tightly with modest replicate counts.
TEST(RunPowerCell, TableLawSizeAndPower) {
  const PowerCell cell = run_power_cell(Scenario::finite_pmf, 200, 0.0, 200, 0.05, 8);
  ASSERT_TRUE(cell.valid);
  EXPECT_EQ(cell.failures, 0);
  EXPECT_GE(cell.true_sw_nrpp, 0.0);
  EXPECT_LE(cell.true_sw_nrpp, 0.12);
  EXPECT_LE(cell.true_ks_rpp, 0.12);
  // the wrong table is obvious at n = 200
  EXPECT_GE(cell.wrong_sw_nrpp, 0.9);
  // mid-p and Pearson scores are discrete, so SW rejects them even under
  // the generating table
  EXPECT_GE(cell.true_sw_nmpp, 0.5);
  EXPECT_GE(cell.true_sw_pearson, 0.5);
}

TEST(RunPowerCell, PowerGrowsWithSampleSize) {
  const PowerCell small = run_power_cell(Scenario::finite_pmf, 50, 0.0, 150, 0.05, 8);
  const PowerCell large = run_power_cell(Scenario::finite_pmf, 400, 0.0, 150, 0.05, 8);
  ASSERT_TRUE(small.valid);
  ASSERT_TRUE(large.valid);
  EXPECT_GT(large.wrong_sw_nrpp, small.wrong_sw_nrpp);
  EXPECT_GE(large.wrong_sw_nrpp, 0.9);
}

// A fitted cell exercises the failure accounting and the deviance column.
TEST(RunPowerCell, FittedScenarioSmoke) {
  const PowerCell cell = run_power_cell(Scenario::nb_dispersion, 120, 2.0, 30, 0.05, 9);
  ASSERT_TRUE(cell.valid);
  EXPECT_LE(cell.failures, 1);
  EXPECT_FALSE(std::isnan(cell.true_sw_nrpp));
  EXPECT_FALSE(std::isnan(cell.true_sw_deviance));
  EXPECT_FALSE(std::isnan(cell.wrong_sw_nrpp));
  EXPECT_GE(cell.true_sw_nrpp, 0.0);
  EXPECT_LE(cell.true_sw_nrpp, 0.25);
}

TEST(RunPowerStudy, GridShapeAndOrder) {
  const std::vector<int> sizes = {50, 100};
  const auto cells =
      run_power_study(Scenario::nb_quadratic, sizes, {0.5, 2.0}, 5, 0.05, 3);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].level, 0.5);
  EXPECT_EQ(cells[0].n, 50);
  EXPECT_EQ(cells[1].level, 0.5);
  EXPECT_EQ(cells[1].n, 100);
  EXPECT_EQ(cells[2].level, 2.0);
  EXPECT_EQ(cells[3].n, 100);

  // empty level list means the scenario's own levels
  const auto defaults = run_power_study(Scenario::finite_pmf, {60}, {}, 5, 0.05, 3);
  ASSERT_EQ(defaults.size(), 1u);
  EXPECT_EQ(defaults[0].level, 0.0);
}

TEST(WrongPmfIllustrationTest, OccupancyAndUniformity) {
  const WrongPmfIllustration ill = illustrative_wrong_pmf(2000, 5);
  ASSERT_EQ(ill.rpp_true.size(), 2000u);
  ASSERT_EQ(ill.rpp_wrong.size(), 2000u);

  // true-table p-values are uniform; wrong-table ones are squeezed into the
  // bands dictated by the mismatched masses
  EXPECT_GT(ks_uniform(ill.rpp_true).p_value, 0.01);
  EXPECT_LT(ks_uniform(ill.rpp_wrong).p_value, 1e-6);

  EXPECT_NEAR(ill.wrong_low, 0.25, 0.03);
  EXPECT_NEAR(ill.wrong_high, 0.25, 0.03);
  EXPECT_NEAR(ill.wrong_mid, 0.50, 0.04);
  EXPECT_DOUBLE_EQ(ill.wrong_low + ill.wrong_mid + ill.wrong_high, 1.0);

  for (double v : ill.rpp_wrong) {
    const bool in_band = (v < 0.1) || (v > 0.1 && v < 0.9) || v > 0.9;
    EXPECT_TRUE(in_band);
  }

  // deterministic in the seed
  const WrongPmfIllustration again = illustrative_wrong_pmf(2000, 5);
  EXPECT_EQ(ill.rpp_true, again.rpp_true);
  EXPECT_EQ(ill.rpp_wrong, again.rpp_wrong);

  EXPECT_THROW(illustrative_wrong_pmf(99, 5), std::invalid_argument);
}
