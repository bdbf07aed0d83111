#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgsmooth/metric.hpp"

namespace avgsmooth {

/// rho^beta for rho > 0, computed as exp(beta * log(rho)); exact for beta == 1.
inline double holder_power(double rho, double beta) noexcept {
  if (beta == 1.0) return rho;
  return std::exp(beta * std::log(rho));
}

inline void check_exponent(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("exponent beta must lie in (0, 1]");
}

/// Per-point beta-slopes of a function on a finite sample.
struct SlopeProfile {
  double beta = 1.0;
  std::vector<double> per_point_slope;
  double empirical_avg = 0.0;  // arithmetic mean of per_point_slope
  double max_slope = 0.0;
};

/// Points with labels in [0, 1].
class LabeledSample {
 public:
  LabeledSample() = default;
  LabeledSample(FiniteMetric space, std::vector<double> labels)
      : space_(std::move(space)), labels_(std::move(labels)) {
    if (labels_.size() != space_.size())
      throw std::invalid_argument("label count does not match point count");
    for (double y : labels_)
      if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("labels must lie in [0, 1]");
  }

  [[nodiscard]] const FiniteMetric& space() const noexcept { return space_; }
  [[nodiscard]] std::span<const double> labels() const noexcept { return labels_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }

 private:
  FiniteMetric space_;
  std::vector<double> labels_;
};

/// What to do for a point with no other point at positive distance.
enum class IsolatedPoint { reject, zero };

namespace detail {

inline void check_values(std::size_t points, std::span<const double> values) {
  if (values.size() != points) throw std::invalid_argument("values are not aligned with points");
}

template <MetricSpace S>
double point_slope_impl(const S& space, std::span<const double> values, double beta,
                        std::size_t i, IsolatedPoint policy) {
  double best = 0.0;
  bool any = false;
  const std::size_t n = space.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const double rho = space.distance(i, j);
    if (!(rho > 0.0)) continue;
    any = true;
    best = std::max(best, std::abs(values[i] - values[j]) / holder_power(rho, beta));
  }
  if (!any && policy == IsolatedPoint::reject)
    throw std::domain_error("slope undefined at point " + std::to_string(i) +
                            ": every other point coincides with it");
  return best;
}

}  // namespace detail

/// max over j with rho(i, j) > 0 of |values_i - values_j| / rho(i, j)^beta.
template <MetricSpace S>
double point_slope(const S& space, std::span<const double> values, double beta, std::size_t i,
                   IsolatedPoint policy = IsolatedPoint::reject) {
  check_exponent(beta);
  detail::check_values(space.size(), values);
  if (i >= space.size()) throw std::out_of_range("point index out of range");
  return detail::point_slope_impl(space, values, beta, i, policy);
}

template <MetricSpace S>
SlopeProfile empirical_smoothness(const S& space, std::span<const double> values, double beta,
                                  IsolatedPoint policy = IsolatedPoint::reject) {
  check_exponent(beta);
  detail::check_values(space.size(), values);
  if (space.size() == 0) throw std::invalid_argument("empirical smoothness of an empty sample");
  SlopeProfile profile;
  profile.beta = beta;
  profile.per_point_slope.resize(space.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double w = detail::point_slope_impl(space, values, beta, i, policy);
    profile.per_point_slope[i] = w;
    sum += w;
    profile.max_slope = std::max(profile.max_slope, w);
  }
  profile.empirical_avg = sum / static_cast<double>(space.size());
  return profile;
}

/// Worst-case beta-slope over the sample.
template <MetricSpace S>
double holder_seminorm(const S& space, std::span<const double> values, double beta) {
  check_exponent(beta);
  detail::check_values(space.size(), values);
  bool distinct = false;
  for (std::size_t j = 1; j < space.size() && !distinct; ++j)
    distinct = space.distance(0, j) > 0.0;
  if (!distinct) throw std::invalid_argument("holder seminorm needs at least two distinct points");
  double best = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    best = std::max(best, detail::point_slope_impl(space, values, beta, i, IsolatedPoint::zero));
  return best;
}

}  // namespace avgsmooth
