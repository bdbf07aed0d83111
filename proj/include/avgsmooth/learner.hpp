#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "avgsmooth/extension.hpp"
#include "avgsmooth/lp.hpp"
#include "avgsmooth/metric.hpp"
#include "avgsmooth/smoothness.hpp"

namespace avgsmooth {

struct LearnerConfig {
  double beta = 1.0;
  double L = 1.0;        // average-smoothness budget of the comparison class
  double epsilon = 0.1;  // target excess risk
  double delta = 0.05;   // failure probability

  void validate() const {
    check_exponent(beta);
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be positive");
    if (!(epsilon > 0.0 && epsilon < L)) throw std::invalid_argument("epsilon must lie in (0, L)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  }
};

/// Parameter schedule of the agnostic learner for a sample of size n.
struct Schedule {
  double delta_prime = 0.0;        // delta / 3
  double alpha = 0.0;              // epsilon / 12, LP accuracy per sample
  double L_hat = 0.0;              // 5 ln^2(2n / delta') L
  double gamma = 0.0;              // epsilon / (2 + 10 L_hat)
  double smoothness_budget = 0.0;  // 5 L_hat
};

inline Schedule make_schedule(const LearnerConfig& config, std::size_t n) {
  config.validate();
  if (n == 0) throw std::invalid_argument("schedule for an empty sample");
  Schedule s;
  s.delta_prime = config.delta / 3.0;
  s.alpha = config.epsilon / 12.0;
  const double lg = std::log(2.0 * static_cast<double>(n) / s.delta_prime);
  s.L_hat = 5.0 * lg * lg * config.L;
  s.gamma = config.epsilon / (2.0 + 10.0 * s.L_hat);
  s.smoothness_budget = 5.0 * s.L_hat;
  return s;
}

/// The relabeling linear program over (f_i, err_i, L_i), i = 1..n:
///   minimize  sum err_i
///   s.t.      err_i >= f_i - Y_i,  err_i >= Y_i - f_i,  0 <= f_i <= 1,
///             (1/n) sum L_i <= budget,
///             f_i - f_j <= L_i rho_ij^beta,  f_j - f_i <= L_i rho_ij^beta  for rho_ij > 0.
/// The budget row is written as a chain of partial sums s_k >= s_{k-1} + L_k,
/// s_n <= n budget, which keeps every row short. Slope and partial-sum
/// variables are stored multiplied by slope_scale() (the median nearest-
/// neighbor distance to the beta), so pair-row coefficients are of order one.
/// Pair rows are materialized on demand; the full program has
/// pair_constraint_count() of them.
class RelabelProgram {
 public:
  RelabelProgram(LabeledSample sample, double beta, double budget)
      : sample_(std::move(sample)), beta_(beta), budget_(budget) {
    check_exponent(beta_);
    if (!(budget_ >= 0.0) || !std::isfinite(budget_))
      throw std::invalid_argument("smoothness budget must be a nonnegative number");
    if (sample_.size() == 0) throw std::invalid_argument("relabeling an empty sample");
    const std::size_t n = sample_.size();
    std::vector<double> nearest;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        const double d = sample_.space().raw_distance(i, j);
        if (j != i && d > 0.0) best = std::min(best, d);
      }
      if (std::isfinite(best)) nearest.push_back(holder_power(best, beta_));
    }
    if (!nearest.empty()) {
      auto mid = nearest.begin() + static_cast<std::ptrdiff_t>(nearest.size() / 2);
      std::nth_element(nearest.begin(), mid, nearest.end());
      scale_ = *mid;
    }
    chain_order_.resize(n);
    std::iota(chain_order_.begin(), chain_order_.end(), std::size_t{0});
    const auto& sp = sample_.space();
    if (sp.has_coordinates()) {
      std::stable_sort(chain_order_.begin(), chain_order_.end(), [&](std::size_t a, std::size_t b) {
        const auto pa = sp.point(a), pb = sp.point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
      });
    } else {
      std::stable_sort(chain_order_.begin(), chain_order_.end(), [&](std::size_t a, std::size_t b) {
        return sp.raw_distance(0, a) < sp.raw_distance(0, b);
      });
    }
  }

  [[nodiscard]] const LabeledSample& sample() const noexcept { return sample_; }
  [[nodiscard]] std::size_t size() const noexcept { return sample_.size(); }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] double budget() const noexcept { return budget_; }
  [[nodiscard]] double slope_scale() const noexcept { return scale_; }
  /// Slope variables in the order the partial-sum chain adds them.
  [[nodiscard]] std::span<const std::size_t> chain_order() const noexcept { return chain_order_; }

  [[nodiscard]] std::size_t value_var(std::size_t i) const noexcept { return i; }
  [[nodiscard]] std::size_t error_var(std::size_t i) const noexcept { return size() + i; }
  [[nodiscard]] std::size_t slope_var(std::size_t i) const noexcept { return 2 * size() + i; }
  [[nodiscard]] std::size_t partial_sum_var(std::size_t i) const noexcept { return 3 * size() + i; }
  [[nodiscard]] std::size_t num_variables() const noexcept { return 4 * size(); }
  [[nodiscard]] std::size_t base_row_count() const noexcept { return 4 * size() + 1; }

  /// rho(X_i, X_j)^beta.
  [[nodiscard]] double scaled_distance(std::size_t i, std::size_t j) const {
    return holder_power(sample_.space().raw_distance(i, j), beta_);
  }

  /// Ordered pairs (i, j), i != j, with rho_ij > 0.
  [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> all_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (i != j && sample_.space().raw_distance(i, j) > 0.0) pairs.emplace_back(i, j);
    return pairs;
  }

  [[nodiscard]] std::size_t pair_constraint_count() const { return 2 * all_pairs().size(); }

  /// The program with slope rows for the listed ordered pairs only.
  [[nodiscard]] LinearProgram materialize(std::span<const std::pair<std::size_t, std::size_t>> pairs) const {
    const std::size_t n = size();
    const auto y = sample_.labels();
    LinearProgram lp(num_variables());
    for (std::size_t i = 0; i < n; ++i) {
      lp.set_cost(error_var(i), 1.0);
      lp.add_row({{error_var(i), 1.0}, {value_var(i), -1.0}}, -y[i]);
      lp.add_row({{error_var(i), 1.0}, {value_var(i), 1.0}}, y[i]);
      lp.add_row({{value_var(i), -1.0}}, -1.0);
    }
    // Partial sums follow a spatial order so the chain adds little fill.
    const auto& order = chain_order_;
    lp.add_row({{partial_sum_var(0), 1.0}, {slope_var(order[0]), -1.0}}, 0.0);
    for (std::size_t k = 1; k < n; ++k)
      lp.add_row({{partial_sum_var(k), 1.0}, {partial_sum_var(k - 1), -1.0}, {slope_var(order[k]), -1.0}}, 0.0);
    lp.add_row({{partial_sum_var(n - 1), -1.0}}, -budget_ * static_cast<double>(n) * scale_);
    for (const auto& [i, j] : pairs) {
      const double r = scaled_distance(i, j) / scale_;
      if (!(r > 0.0)) continue;
      lp.add_row({{slope_var(i), r}, {value_var(i), -1.0}, {value_var(j), 1.0}}, 0.0);
      lp.add_row({{slope_var(i), r}, {value_var(i), 1.0}, {value_var(j), -1.0}}, 0.0);
    }
    return lp;
  }

  [[nodiscard]] LinearProgram materialize_full() const {
    const auto pairs = all_pairs();
    return materialize(pairs);
  }

 private:
  LabeledSample sample_;
  double beta_;
  double budget_;
  double scale_ = 1.0;
  std::vector<std::size_t> chain_order_;
};

inline RelabelProgram build_lp(const LabeledSample& sample, double beta, double budget) {
  return RelabelProgram(sample, beta, budget);
}

enum class LpStatus { optimal_within_alpha, infeasible, not_certified };

inline std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal_within_alpha: return "optimal_within_alpha";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::not_certified: return "not_certified";
  }
  return "unknown";
}

struct RelabelResult {
  std::vector<double> relabeled;    // f_i in [0, 1]
  double objective = 0.0;           // sum |f_i - Y_i| / n
  double total_error = 0.0;         // sum |f_i - Y_i|
  double lower_bound = 0.0;         // bound on the optimal sum err_i
  double achieved_smoothness = 0.0; // empirical smoothness of relabeled
  LpStatus lp_status = LpStatus::not_certified;
  std::size_t pair_rows = 0;        // slope rows in the last program solved
  int rounds = 0;                   // constraint-generation rounds
};

struct RelabelSolverOptions {
  std::size_t initial_neighbors = 8;  // slope rows seeded per point
  std::size_t cuts_per_point = 2;     // violated rows added per point and round
  int max_rounds = 40;
  double feasibility_tolerance = 1e-8;
  bool exact_fit_shortcut = true;     // skip the LP when the labels already fit the budget
  bool full_program = false;          // materialize every pair up front
  InteriorPointOptions ipm{};
};

namespace detail {

inline double weighted_median(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

inline double total_abs_error(std::span<const double> f, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i] - y[i]);
  return s;
}

// k nearest points at positive distance, per point.
inline std::vector<std::pair<std::size_t, std::size_t>> nearest_pairs(const FiniteMetric& space,
                                                                      std::size_t k) {
  const std::size_t n = space.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::pair<double, std::size_t>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      const double d = space.raw_distance(i, j);
      if (j != i && d > 0.0) row.emplace_back(d, j);
    }
    const std::size_t take = std::min(k, row.size());
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(take), row.end());
    for (std::size_t t = 0; t < take; ++t) pairs.emplace_back(i, row[t].second);
  }
  return pairs;
}

}  // namespace detail

/// Solves the relabeling program to within accuracy * n of its optimum
/// (total error), returning labels that satisfy the budget exactly.
inline RelabelResult solve_lp(const RelabelProgram& program, double accuracy,
                              const RelabelSolverOptions& options = {}) {
  if (!(accuracy > 0.0)) throw std::invalid_argument("accuracy must be positive");
  const std::size_t n = program.size();
  const auto& space = program.sample().space();
  const auto y = program.sample().labels();
  const double beta = program.beta();
  const double budget = program.budget();
  const double nd = static_cast<double>(n);

  RelabelResult result;
  auto finish = [&](std::vector<double> f, double lower_bound) {
    result.achieved_smoothness = empirical_smoothness(space, f, beta, IsolatedPoint::zero).empirical_avg;
    result.relabeled = std::move(f);
    result.total_error = detail::total_abs_error(result.relabeled, y);
    result.objective = result.total_error / nd;
    result.lower_bound = std::min(lower_bound, result.total_error);
    result.lp_status = (result.total_error - result.lower_bound <= accuracy * nd)
                           ? LpStatus::optimal_within_alpha
                           : LpStatus::not_certified;
    return result;
  };

  if (options.exact_fit_shortcut &&
      empirical_smoothness(space, y, beta, IsolatedPoint::zero).empirical_avg <= budget)
    return finish(std::vector<double>(y.begin(), y.end()), 0.0);

  if (budget == 0.0) {
    // Every slope must vanish: the best constant is a median of the labels.
    const double m = detail::weighted_median(y);
    return finish(std::vector<double>(n, m), detail::total_abs_error(std::vector<double>(n, m), y));
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs =
      options.full_program ? program.all_pairs() : detail::nearest_pairs(space, options.initial_neighbors);
  std::unordered_set<std::uint64_t> present;
  for (const auto& [i, j] : pairs) present.insert(static_cast<std::uint64_t>(i) * n + j);

  InteriorPointOptions ipm = options.ipm;
  ipm.absolute_gap = std::max(ipm.absolute_gap, 0.01 * accuracy * nd);

  // Until a round solves, fall back on the labels; the repair below makes them feasible.
  std::vector<double> f(y.begin(), y.end());
  bool solved = false;
  double lower_bound = 0.0;
  for (int round = 1; round <= options.max_rounds; ++round) {
    result.rounds = round;
    const LinearProgram lp = program.materialize(pairs);
    result.pair_rows = lp.num_rows() - program.base_row_count();
    const LpSolution sol = solve_interior_point(lp, ipm);
    if (sol.status == LpSolveStatus::infeasible) {
      result.lp_status = LpStatus::infeasible;
      return result;
    }
    // A stalled run still returns its best nearly feasible iterate; its dual
    // objective bounds the optimum only when the duals are feasible.
    const bool usable = sol.status == LpSolveStatus::optimal ||
                        (sol.primal_residual <= ipm.fallback_tolerance && sol.dual_residual <= ipm.fallback_tolerance);
    if (!usable) break;
    solved = true;
    if (sol.status == LpSolveStatus::optimal || sol.dual_residual <= ipm.feasibility_tolerance)
      lower_bound = std::max(lower_bound, sol.dual_objective);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::clamp(sol.x[program.value_var(i)], 0.0, 1.0);

    // Separation: rows of the full program violated by the current point.
    std::size_t added = 0;
    std::vector<std::pair<double, std::size_t>> viol;
    for (std::size_t i = 0; i < n; ++i) {
      const double li = sol.x[program.slope_var(i)] / program.slope_scale();
      viol.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double rho = space.raw_distance(i, j);
        if (!(rho > 0.0)) continue;
        const double r = holder_power(rho, beta);
        const double excess = std::abs(f[i] - f[j]) - li * r;
        if (excess > options.feasibility_tolerance) viol.emplace_back(-excess / r, j);
      }
      const std::size_t take = std::min(options.cuts_per_point, viol.size());
      std::partial_sort(viol.begin(), viol.begin() + static_cast<std::ptrdiff_t>(take), viol.end());
      for (std::size_t t = 0; t < take; ++t) {
        const auto key = static_cast<std::uint64_t>(i) * n + viol[t].second;
        if (present.insert(key).second) {
          pairs.emplace_back(i, viol[t].second);
          ++added;
        }
      }
    }
    if (added == 0 || sol.status != LpSolveStatus::optimal) break;
  }

  // Enforce the budget exactly by contracting toward 1/2, which scales every slope.
  double lambda_hat = empirical_smoothness(space, f, beta, IsolatedPoint::zero).empirical_avg;
  for (int k = 0; k < 8 && lambda_hat > budget; ++k) {
    const double t = budget / lambda_hat * (1.0 - 1e-15 * (k + 1));
    for (auto& v : f) v = 0.5 + t * (v - 0.5);
    lambda_hat = empirical_smoothness(space, f, beta, IsolatedPoint::zero).empirical_avg;
  }
  if (!solved) {
    std::vector<double> constant(n, detail::weighted_median(y));
    if (lambda_hat > budget || detail::total_abs_error(constant, y) < detail::total_abs_error(f, y))
      f = std::move(constant);
  }
  return finish(std::move(f), lower_bound);
}

/// Everything the learner produced.
struct LearnOutcome {
  Schedule schedule;
  RelabelResult relabel;
  ExtensionFit extension;
};

/// Relabel under the empirical smoothness budget 5 L_hat with accuracy alpha,
/// then extend the relabeled sample with trimming parameter gamma.
inline LearnOutcome learn_traced(const LabeledSample& sample, const LearnerConfig& config,
                                 const RelabelSolverOptions& options = {}) {
  config.validate();
  if (sample.size() == 0) throw std::invalid_argument("learning from an empty sample");
  LearnOutcome out;
  out.schedule = make_schedule(config, sample.size());
  const RelabelProgram program = build_lp(sample, config.beta, out.schedule.smoothness_budget);
  out.relabel = solve_lp(program, out.schedule.alpha, options);
  if (out.relabel.lp_status == LpStatus::infeasible)
    throw std::runtime_error("relabeling program reported infeasible");
  out.extension =
      fit_extension_traced(sample.space(), out.relabel.relabeled, config.beta, out.schedule.gamma);
  return out;
}

inline ExtensionModel learn(const LabeledSample& sample, const LearnerConfig& config,
                            const RelabelSolverOptions& options = {}) {
  return learn_traced(sample, config, options).extension.model;
}

/// Implementation constants for the sample-size formula: C = 1 and one
/// factor of ln(1/epsilon) standing in for the polylog.
inline constexpr double kSampleSizeConstant = 1.0;

/// C (N((epsilon / (640 L ln(1/epsilon)))^(1/beta)) + ln(1/delta)) ln(1/epsilon) / epsilon^2,
/// rounded up. `covering` maps a scale t to a covering number of the domain.
template <class Covering>
  requires std::invocable<Covering, double>
std::uint64_t required_sample_size(const LearnerConfig& config, Covering&& covering) {
  config.validate();
  const double eps = config.epsilon;
  if (!(eps < 1.0)) throw std::invalid_argument("required_sample_size needs epsilon < 1");
  const double log_inv_eps = std::log(1.0 / eps);
  const double scale = std::pow(eps / (640.0 * config.L * log_inv_eps), 1.0 / config.beta);
  const double cover = static_cast<double>(covering(scale));
  const double n = kSampleSizeConstant * (cover + std::log(1.0 / config.delta)) * log_inv_eps / (eps * eps);
  if (!(n < 0x1.0p63)) throw std::overflow_error("required sample size overflows");
  return static_cast<std::uint64_t>(std::ceil(n));
}

}  // namespace avgsmooth
