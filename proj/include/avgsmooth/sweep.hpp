#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "avgsmooth/bounds.hpp"
#include "avgsmooth/learner.hpp"
#include "avgsmooth/rng.hpp"
#include "avgsmooth/synthetic.hpp"

namespace avgsmooth {

struct SweepSpec {
  Scenario scenario;
  std::vector<std::size_t> n_grid;  // ascending
  std::size_t trials = 1;
  LearnerConfig config;
  std::size_t mc_draws = 100'000;   // held-out draws of X per trial
  std::uint64_t seed = 0;
  unsigned threads = 1;
  RelabelSolverOptions solver{};

  void validate() const {
    avgsmooth::validate(scenario);
    config.validate();
    if (n_grid.empty()) throw std::invalid_argument("n_grid is empty");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      if (n_grid[k] == 0) throw std::invalid_argument("sample sizes must be positive");
      if (k > 0 && !(n_grid[k] > n_grid[k - 1])) throw std::invalid_argument("n_grid must be ascending");
    }
    if (trials == 0) throw std::invalid_argument("trials must be at least 1");
    if (mc_draws < 2) throw std::invalid_argument("mc_draws must be at least 2");
  }
};

struct SweepRow {
  std::size_t n = 0;
  std::size_t trial = 0;
  double excess = 0.0;             // held-out L_D(f) - L_D(f*)
  double excess_stderr = 0.0;      // Monte Carlo standard error
  double lambda_hat = 0.0;         // empirical smoothness of the relabeling
  std::size_t net_size = 0;        // |A|
  double runtime_seconds = 0.0;
};

struct RateReport {
  std::vector<SweepRow> rows;          // ordered by (n, trial)
  std::vector<std::size_t> n_values;
  std::vector<double> mean_excess;     // trial mean per n
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double fitted_intercept = std::numeric_limits<double>::quiet_NaN();
  double predicted_slope = std::numeric_limits<double>::quiet_NaN();  // -beta / (d + 2 beta)
  double bayes_risk = 0.0;
};

/// Unweighted least squares of log y on log x; points with y <= 0 are skipped.
inline std::pair<double, double> fit_log_log(std::span<const std::size_t> xs, std::span<const double> ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(ys[i] > 0.0)) continue;
    const double lx = std::log(static_cast<double>(xs[i])), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  if (k < 2) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double kd = static_cast<double>(k);
  const double slope = (kd * sxy - sx * sy) / (kd * sxx - sx * sx);
  return {slope, (sy - slope * sx) / kd};
}

/// Seeds: the sample of (n_grid[k], trial t) uses derive_seed(seed, 2k, t),
/// its held-out draws derive_seed(seed, 2k + 1, t).
inline SweepRow run_sweep_trial(const SweepSpec& spec, std::size_t grid_index, std::size_t trial) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = spec.n_grid[grid_index];
  const auto data = sample(spec.scenario, n, derive_seed(spec.seed, 2 * grid_index, trial));
  const auto out = learn_traced(data, spec.config, spec.solver);
  const auto& model = out.extension.model;
  const auto est = excess_risk_monte_carlo(
      spec.scenario, [&](std::span<const double> x) { return model.predict(x); }, spec.mc_draws,
      derive_seed(spec.seed, 2 * grid_index + 1, trial));
  SweepRow row;
  row.n = n;
  row.trial = trial;
  row.excess = est.excess;
  row.excess_stderr = est.standard_error;
  row.lambda_hat = out.relabel.achieved_smoothness;
  row.net_size = model.size();
  row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Runs every (n, trial) pair, in parallel when threads > 1. Completed rows
/// are handed to on_row in (n, trial) order as soon as all earlier rows are
/// done; if a trial throws, the rows before it have been delivered and the
/// exception propagates.
using SweepTrialFn = std::function<SweepRow(const SweepSpec&, std::size_t grid_index, std::size_t trial)>;

inline RateReport run_sweep(const SweepSpec& spec, const std::function<void(const SweepRow&)>& on_row = {},
                            const SweepTrialFn& trial_fn = run_sweep_trial) {
  spec.validate();
  if (spec.scenario.space.kind != SpaceKind::finite && spec.scenario.space.metric == MetricKind::matrix)
    throw std::invalid_argument("sweep scenarios need coordinates");
  const std::size_t total = spec.n_grid.size() * spec.trials;
  std::vector<std::optional<SweepRow>> slots(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  std::mutex emit_mutex;
  std::size_t emitted = 0;

  auto flush = [&] {
    // Caller holds emit_mutex.
    while (emitted < total && slots[emitted]) {
      if (on_row) on_row(*slots[emitted]);
      ++emitted;
    }
  };
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      std::optional<SweepRow> row;
      std::exception_ptr err;
      try {
        row = trial_fn(spec, task / spec.trials, task % spec.trials);
      } catch (...) {
        err = std::current_exception();
      }
      std::lock_guard lock(emit_mutex);
      if (err) {
        errors[task] = err;
        next = total;  // stop handing out work
      } else {
        slots[task] = std::move(row);
        flush();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RateReport report;
  report.bayes_risk = bayes_risk(spec.scenario);
  for (auto& s : slots) report.rows.push_back(*s);
  for (std::size_t k = 0; k < spec.n_grid.size(); ++k) {
    double sum = 0.0;
    for (std::size_t t = 0; t < spec.trials; ++t) sum += report.rows[k * spec.trials + t].excess;
    report.n_values.push_back(spec.n_grid[k]);
    report.mean_excess.push_back(sum / static_cast<double>(spec.trials));
  }
  std::tie(report.fitted_slope, report.fitted_intercept) = fit_log_log(report.n_values, report.mean_excess);
  if (spec.scenario.space.kind != SpaceKind::finite)
    report.predicted_slope = -rate_exponent(spec.scenario.space.dim, spec.config.beta);
  return report;
}

}  // namespace avgsmooth
