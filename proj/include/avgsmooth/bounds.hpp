#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "avgsmooth/learner.hpp"

namespace avgsmooth {

/// Constant in front of the square-root deviation term.
inline constexpr double kDeviationConstant = 2.0;

/// A pair of envelopes on a finite domain; f is in the bracket iff lower <= f <= upper.
struct Bracket {
  std::vector<double> lower;
  std::vector<double> upper;

  Bracket() = default;
  Bracket(std::vector<double> lo, std::vector<double> up) : lower(std::move(lo)), upper(std::move(up)) {
    if (lower.size() != upper.size()) throw std::invalid_argument("bracket envelopes differ in length");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] <= upper[i])) throw std::invalid_argument("bracket lower envelope exceeds upper");
  }

  [[nodiscard]] std::size_t size() const noexcept { return lower.size(); }

  /// sum_i mu_i (upper_i - lower_i).
  [[nodiscard]] double width(std::span<const double> mu) const {
    if (mu.size() != size()) throw std::invalid_argument("measure is not aligned with the bracket");
    double w = 0.0;
    for (std::size_t i = 0; i < size(); ++i) w += mu[i] * (upper[i] - lower[i]);
    return w;
  }

  [[nodiscard]] bool contains(std::span<const double> f) const {
    if (f.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
      if (!(lower[i] <= f[i] && f[i] <= upper[i])) return false;
    return true;
  }
};

/// Bracket of the absolute loss (x, y) -> |f(x) - y| for f in [f_lower(x), f_upper(x)].
inline std::pair<double, double> loss_bracket_at(double f_lower, double f_upper, double y) noexcept {
  if (y < f_lower) return {f_lower - y, f_upper - y};
  if (y > f_upper) return {y - f_upper, y - f_lower};
  return {0.0, f_upper - f_lower};
}

/// Loss envelopes on the grid (x_i, ys_k), stored row-major in x.
struct LossBracket {
  std::vector<double> ys;
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] std::size_t x_count() const noexcept { return ys.empty() ? 0 : lower.size() / ys.size(); }
  [[nodiscard]] double lower_at(std::size_t i, std::size_t k) const { return lower[i * ys.size() + k]; }
  [[nodiscard]] double upper_at(std::size_t i, std::size_t k) const { return upper[i * ys.size() + k]; }

  /// Width under mu on x times a label law nu on ys.
  [[nodiscard]] double width(std::span<const double> mu, std::span<const double> nu) const {
    if (mu.size() != x_count() || nu.size() != ys.size())
      throw std::invalid_argument("measures are not aligned with the loss grid");
    double w = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t k = 0; k < nu.size(); ++k) w += mu[i] * nu[k] * (upper_at(i, k) - lower_at(i, k));
    return w;
  }
};

inline LossBracket loss_bracket(const Bracket& f_bracket, std::span<const double> ys) {
  LossBracket out;
  out.ys.assign(ys.begin(), ys.end());
  out.lower.reserve(f_bracket.size() * ys.size());
  out.upper.reserve(f_bracket.size() * ys.size());
  for (std::size_t i = 0; i < f_bracket.size(); ++i) {
    for (double y : ys) {
      const auto [lo, up] = loss_bracket_at(f_bracket.lower[i], f_bracket.upper[i], y);
      out.lower.push_back(lo);
      out.upper.push_back(up);
    }
  }
  return out;
}

namespace detail {

inline void check_bound_epsilon(double epsilon, double L) {
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be positive");
  if (!(epsilon > 0.0 && epsilon < L)) throw std::invalid_argument("epsilon must lie in (0, L)");
  if (!(epsilon < 1.0)) throw std::invalid_argument("epsilon must be below 1");
}

}  // namespace detail

/// N((epsilon / (128 L ln(1/epsilon)))^(1/beta)) * ln(16 log2(1/epsilon) / epsilon),
/// an upper bound on the log bracketing number of the average-smooth class.
/// The log factor turns negative for epsilon above about 0.957; a log count
/// is never negative, so the result is clamped at 0.
template <class Covering>
  requires std::invocable<Covering, double>
double bracketing_entropy_bound(double epsilon, double L, double beta, Covering&& covering) {
  detail::check_bound_epsilon(epsilon, L);
  check_exponent(beta);
  const double scale = std::pow(epsilon / (128.0 * L * std::log(1.0 / epsilon)), 1.0 / beta);
  const double cover = static_cast<double>(covering(scale));
  return std::max(0.0, cover * std::log(16.0 * std::log2(1.0 / epsilon) / epsilon));
}

/// alpha + C sqrt((log_bracketing + ln(1/delta)) / n).
inline double deviation_bound(double alpha, std::uint64_t n, double delta, double log_bracketing,
                              double constant = kDeviationConstant) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
  if (n == 0) throw std::invalid_argument("n must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(log_bracketing >= 0.0)) throw std::invalid_argument("log bracketing number must be nonnegative");
  return alpha + constant * std::sqrt((log_bracketing + std::log(1.0 / delta)) / static_cast<double>(n));
}

/// beta / (d + 2 beta): decay exponent of the excess risk in n on d-dimensional spaces.
inline double rate_exponent(unsigned d, double beta) {
  if (d == 0) throw std::invalid_argument("dimension must be positive");
  check_exponent(beta);
  return beta / (static_cast<double>(d) + 2.0 * beta);
}

/// Minimum number of brackets of mu-width <= t covering a finite class.
struct BracketingCount {
  std::size_t count = 0;
  bool exact = false;                // false when the search budget ran out
  std::vector<std::size_t> group;    // bracket index per function
};

inline constexpr std::size_t kExactBracketingMaxPoints = 3;
inline constexpr std::size_t kExactBracketingMaxLevels = 5;

/// Brackets can be shrunk to the envelope of their members, so the count is
/// the smallest partition of the class into groups whose envelope has width
/// <= t. Exact by branch and bound up to `node_budget` search nodes; beyond
/// that the best partition found (greedy at worst) is returned with exact = false.
inline BracketingCount bracketing_number(std::span<const std::vector<double>> functions,
                                         std::span<const double> mu, double t,
                                         std::uint64_t node_budget = 20'000'000) {
  if (functions.empty()) throw std::invalid_argument("bracketing number of an empty class");
  if (!(t >= 0.0)) throw std::invalid_argument("bracket width must be nonnegative");
  const std::size_t m = mu.size();
  for (const auto& f : functions)
    if (f.size() != m) throw std::invalid_argument("function is not aligned with the measure");
  const std::size_t k = functions.size();
  const double slack = 1e-12 * (1.0 + t);

  // Greedy first fit gives the initial incumbent.
  struct Group {
    std::vector<double> lo, hi;
  };
  auto envelope_width = [&](const Group& g, const std::vector<double>& f) {
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i) w += mu[i] * (std::max(g.hi[i], f[i]) - std::min(g.lo[i], f[i]));
    return w;
  };

  BracketingCount best;
  {
    std::vector<Group> groups;
    best.group.resize(k);
    for (std::size_t a = 0; a < k; ++a) {
      std::size_t g = 0;
      for (; g < groups.size(); ++g)
        if (envelope_width(groups[g], functions[a]) <= t + slack) break;
      if (g == groups.size()) groups.push_back({functions[a], functions[a]});
      for (std::size_t i = 0; i < m; ++i) {
        groups[g].lo[i] = std::min(groups[g].lo[i], functions[a][i]);
        groups[g].hi[i] = std::max(groups[g].hi[i], functions[a][i]);
      }
      best.group[a] = g;
    }
    best.count = groups.size();
  }

  // Depth-first assignment; a new group is only opened as the next index,
  // which removes group relabeling symmetry.
  std::vector<Group> groups;
  std::vector<std::size_t> assign(k);
  std::uint64_t nodes = 0;
  bool exhausted = false;
  auto dfs = [&](auto&& self, std::size_t a) -> void {
    if (exhausted) return;
    if (++nodes > node_budget) {
      exhausted = true;
      return;
    }
    if (groups.size() >= best.count) return;
    if (a == k) {
      best.count = groups.size();
      best.group = assign;
      return;
    }
    const auto& f = functions[a];
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (envelope_width(groups[g], f) > t + slack) continue;
      const Group saved = groups[g];
      for (std::size_t i = 0; i < m; ++i) {
        groups[g].lo[i] = std::min(groups[g].lo[i], f[i]);
        groups[g].hi[i] = std::max(groups[g].hi[i], f[i]);
      }
      assign[a] = g;
      self(self, a + 1);
      groups[g] = saved;
      if (exhausted) return;
    }
    if (groups.size() + 1 < best.count) {
      groups.push_back({f, f});
      assign[a] = groups.size() - 1;
      self(self, a + 1);
      groups.pop_back();
    }
  };
  dfs(dfs, 0);
  best.exact = !exhausted;
  return best;
}

/// Every function on `points` with values in {0, 1/(levels-1), ..., 1}
/// whose average slope under mu (over the finite space) is at most L.
inline std::vector<std::vector<double>> grid_function_class(const FiniteMetric& points,
                                                            std::span<const double> mu,
                                                            std::size_t levels, double beta, double L) {
  const std::size_t m = points.size();
  if (m == 0 || m > kExactBracketingMaxPoints)
    throw std::invalid_argument("grid function classes are limited to " +
                                std::to_string(kExactBracketingMaxPoints) + " points");
  if (levels < 2 || levels > kExactBracketingMaxLevels)
    throw std::invalid_argument("grid function classes are limited to 2.." +
                                std::to_string(kExactBracketingMaxLevels) + " levels");
  if (mu.size() != m) throw std::invalid_argument("measure is not aligned with the points");
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> f(m);
  while (true) {
    for (std::size_t i = 0; i < m; ++i) f[i] = static_cast<double>(idx[i]) / static_cast<double>(levels - 1);
    const auto slopes = empirical_smoothness(points, f, beta, IsolatedPoint::zero).per_point_slope;
    double avg = 0.0;
    for (std::size_t i = 0; i < m; ++i) avg += mu[i] * slopes[i];
    if (avg <= L) out.push_back(f);
    std::size_t p = 0;
    while (p < m && ++idx[p] == levels) idx[p++] = 0;
    if (p == m) break;
  }
  return out;
}

/// Inputs and evaluated bounds for one learning problem.
struct BoundReport {
  double epsilon = 0.0;
  double alpha = 0.0;
  double L = 0.0;
  double beta = 1.0;
  double delta = 0.0;
  std::uint64_t n = 0;
  std::string covering_id;
  double bracketing_entropy_bound = 0.0;  // at scale alpha
  double deviation_bound = 0.0;           // at sample size n
  std::uint64_t sample_complexity = 0;    // at accuracy epsilon
  double rate_exponent = 0.0;             // 0 unless a dimension is known
};

template <class Covering>
  requires std::invocable<Covering, double>
BoundReport make_bound_report(const LearnerConfig& config, double alpha, std::uint64_t n,
                              std::string covering_id, Covering&& covering, unsigned dimension = 0) {
  config.validate();
  BoundReport r;
  r.epsilon = config.epsilon;
  r.alpha = alpha;
  r.L = config.L;
  r.beta = config.beta;
  r.delta = config.delta;
  r.n = n;
  r.covering_id = std::move(covering_id);
  r.bracketing_entropy_bound = bracketing_entropy_bound(alpha, config.L, config.beta, covering);
  r.deviation_bound = deviation_bound(alpha, n, config.delta, r.bracketing_entropy_bound);
  r.sample_complexity = required_sample_size(config, covering);
  if (dimension > 0) r.rate_exponent = rate_exponent(dimension, config.beta);
  return r;
}

}  // namespace avgsmooth
