#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "avgsmooth/sweep.hpp"

namespace avgsmooth {
namespace {

SweepSpec small_spec() {
  SweepSpec spec;
  spec.scenario = interval_scenario({0.0, 0.5, 1.0}, {0.2, 0.8, 0.2}, {NoiseKind::uniform, 0.2}, 3);
  spec.n_grid = {40, 80};
  spec.trials = 3;
  spec.config = {1.0, 0.05, 0.02, 0.1};
  spec.mc_draws = 2000;
  spec.seed = 99;
  return spec;
}

TEST(FitLogLogTest, RecoversPowerLaw) {
  const std::vector<std::size_t> xs{100, 200, 400, 800};
  std::vector<double> ys;
  for (auto x : xs) ys.push_back(3.0 * std::pow(static_cast<double>(x), -0.4));
  const auto [slope, intercept] = fit_log_log(xs, ys);
  EXPECT_NEAR(slope, -0.4, 1e-12);
  EXPECT_NEAR(intercept, std::log(3.0), 1e-12);
}

TEST(FitLogLogTest, SkipsNonpositiveMeans) {
  const std::vector<std::size_t> xs{10, 20, 40};
  const std::vector<double> ys{1.0, 0.0, 0.25};
  EXPECT_NEAR(fit_log_log(xs, ys).first, -1.0, 1e-12);
  const std::vector<double> one{1.0, 0.0, -1.0};
  EXPECT_TRUE(std::isnan(fit_log_log(xs, one).first));
}

TEST(SweepTest, SingleRow) {
  auto spec = small_spec();
  spec.n_grid = {30};
  spec.trials = 1;
  std::size_t calls = 0;
  const auto rep = run_sweep(spec, [&](const SweepRow&) { ++calls; });
  EXPECT_EQ(calls, 1u);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].n, 30u);
  EXPECT_TRUE(std::isnan(rep.fitted_slope));
  EXPECT_NEAR(rep.predicted_slope, -1.0 / 3.0, 1e-15);
}

TEST(SweepTest, RowsArriveInOrderAndAreThreadIndependent) {
  auto spec = small_spec();
  std::vector<SweepRow> serial, parallel;
  run_sweep(spec, [&](const SweepRow& r) { serial.push_back(r); });
  spec.threads = 3;
  run_sweep(spec, [&](const SweepRow& r) { parallel.push_back(r); });
  ASSERT_EQ(serial.size(), 6u);
  ASSERT_EQ(parallel.size(), 6u);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].n, spec.n_grid[k / 3]);
    EXPECT_EQ(serial[k].trial, k % 3);
    EXPECT_EQ(parallel[k].n, serial[k].n);
    EXPECT_EQ(parallel[k].trial, serial[k].trial);
    EXPECT_EQ(parallel[k].excess, serial[k].excess);
    EXPECT_EQ(parallel[k].lambda_hat, serial[k].lambda_hat);
    EXPECT_EQ(parallel[k].net_size, serial[k].net_size);
  }
}

TEST(SweepTest, ReportAggregatesTrialMeans) {
  const auto spec = small_spec();
  const auto rep = run_sweep(spec);
  ASSERT_EQ(rep.mean_excess.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    double sum = 0.0;
    for (std::size_t t = 0; t < 3; ++t) sum += rep.rows[k * 3 + t].excess;
    EXPECT_DOUBLE_EQ(rep.mean_excess[k], sum / 3.0);
  }
  EXPECT_NEAR(rep.bayes_risk, bayes_risk(spec.scenario), 1e-15);
  EXPECT_DOUBLE_EQ(rep.fitted_slope, fit_log_log(rep.n_values, rep.mean_excess).first);
}

TEST(SweepTest, NoiselessExcessDecreasesInN) {
  SweepSpec spec;
  spec.scenario = interval_scenario({0.0, 0.5, 1.0}, {0.2, 0.8, 0.2}, {}, 3);
  spec.n_grid = {20, 80, 320};
  spec.trials = 4;
  spec.config = {1.0, 1.0, 0.1, 0.1};
  spec.mc_draws = 5000;
  spec.seed = 4;
  const auto rep = run_sweep(spec);
  for (std::size_t k = 1; k < rep.mean_excess.size(); ++k) EXPECT_LT(rep.mean_excess[k], rep.mean_excess[k - 1]);
}

TEST(SweepTest, InvalidSpecsAreRejected) {
  auto spec = small_spec();
  spec.n_grid = {80, 40};
  EXPECT_THROW(run_sweep(spec), std::invalid_argument);
  spec = small_spec();
  spec.trials = 0;
  EXPECT_THROW(run_sweep(spec), std::invalid_argument);
  spec = small_spec();
  spec.n_grid = {};
  EXPECT_THROW(run_sweep(spec), std::invalid_argument);
}

TEST(SweepTest, EarlierRowsAreFlushedBeforeAFailure) {
  const auto spec = small_spec();
  std::vector<SweepRow> seen;
  auto failing = [](const SweepSpec& s, std::size_t k, std::size_t t) {
    if (k == 1 && t == 1) throw std::runtime_error("trial failed");
    return run_sweep_trial(s, k, t);
  };
  EXPECT_THROW(run_sweep(spec, [&](const SweepRow& r) { seen.push_back(r); }, failing), std::runtime_error);
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_EQ(seen.back().n, 80u);
  EXPECT_EQ(seen.back().trial, 0u);
}

TEST(SweepTest, FailedLpRoundsStillYieldRows) {
  auto spec = small_spec();
  spec.solver.ipm.max_iterations = 0;
  std::size_t seen = 0;
  EXPECT_NO_THROW(run_sweep(spec, [&](const SweepRow&) { ++seen; }));
  EXPECT_EQ(seen, 6u);
}

}  // namespace
}  // namespace avgsmooth
