#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgsmooth/metric.hpp"
#include "avgsmooth/smoothness.hpp"

namespace avgsmooth {

/// Trained two-point extension predictor: a net A of the retained sample
/// points with labels in [0, 1]. Prediction at x takes the ordered pair
/// (u, v), u != v, maximizing (f(v) - f(u)) / (rho(x,u)^beta + rho(x,v)^beta)
/// and interpolates f(u) + rho(x,u)^beta / (rho(x,u)^beta + rho(x,v)^beta) * (f(v) - f(u)).
///
/// For matrix metrics the stored "point" of a net entry is its index in the
/// training space; such models predict through predict_from_distances().
class ExtensionModel {
 public:
  ExtensionModel() = default;

  ExtensionModel(MetricKind kind, double beta, double gamma, std::vector<Point> net_points,
                 std::vector<double> net_labels, std::size_t trimmed_count,
                 std::vector<std::size_t> net_indices = {})
      : kind_(kind),
        beta_(beta),
        gamma_(gamma),
        labels_(std::move(net_labels)),
        trimmed_count_(trimmed_count),
        net_indices_(std::move(net_indices)) {
    check_exponent(beta_);
    if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) throw std::invalid_argument("gamma must be nonnegative");
    if (labels_.empty()) throw std::invalid_argument("extension model needs at least one net point");
    if (net_points.size() != labels_.size())
      throw std::invalid_argument("net points and labels differ in length");
    for (double y : labels_)
      if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("net labels must lie in [0, 1]");
    if (!net_indices_.empty() && net_indices_.size() != labels_.size())
      throw std::invalid_argument("net indices and labels differ in length");
    dim_ = net_points.front().size();
    if (dim_ == 0) throw std::invalid_argument("net point without coordinates");
    if (kind_ == MetricKind::matrix && dim_ != 1)
      throw std::invalid_argument("matrix-metric net points must be single indices");
    for (const auto& p : net_points) {
      if (p.size() != dim_) throw std::invalid_argument("net points have inconsistent dimension");
      coords_.insert(coords_.end(), p.begin(), p.end());
    }
    if (kind_ != MetricKind::matrix) {
      const double scale = net_scale();
      for (std::size_t a = 0; a < size(); ++a)
        for (std::size_t b = a + 1; b < size(); ++b)
          if (!(coordinate_distance(kind_, point(a), point(b)) >= scale))
            throw std::invalid_argument("net points are not a packing at scale gamma^(1/beta)");
    }
  }

  [[nodiscard]] MetricKind kind() const noexcept { return kind_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] double net_scale() const { return std::pow(gamma_, 1.0 / beta_); }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
  [[nodiscard]] std::size_t trimmed_count() const noexcept { return trimmed_count_; }
  [[nodiscard]] std::span<const double> labels() const noexcept { return labels_; }
  [[nodiscard]] std::span<const std::size_t> net_indices() const noexcept { return net_indices_; }
  [[nodiscard]] std::span<const double> point(std::size_t a) const {
    return {coords_.data() + a * dim_, dim_};
  }

  /// Prediction at a coordinate vector (euclidean / linf models).
  [[nodiscard]] double predict(std::span<const double> x) const {
    if (kind_ == MetricKind::matrix)
      throw std::invalid_argument("matrix-metric models predict from distances");
    std::vector<double> dist(size());
    for (std::size_t a = 0; a < size(); ++a) dist[a] = coordinate_distance(kind_, x, point(a));
    return predict_from_distances(dist);
  }

  [[nodiscard]] double predict(double x) const { return predict(std::span<const double>(&x, 1)); }

  /// Prediction given rho(x, a) for every net point a, in net order.
  /// Solves the pair maximization with Dinkelbach iterations, O(|A|) each.
  [[nodiscard]] double predict_from_distances(std::span<const double> dist) const {
    std::vector<double> d;
    if (auto hit = prepare(dist, d)) return *hit;
    const std::size_t m = size();
    const auto& f = labels_;

    std::size_t u = 0, v = 0;
    for (std::size_t a = 1; a < m; ++a) {
      if (f[a] < f[u]) u = a;
      if (f[a] > f[v]) v = a;
    }
    if (!(f[v] > f[u])) return f[0];  // constant labels: every ratio is zero

    double lambda = (f[v] - f[u]) / (d[u] + d[v]);
    for (std::size_t iter = 0; iter < m * m; ++iter) {
      // Top two of f_b - lambda d_b (for v) and bottom two of f_b + lambda d_b (for u).
      std::size_t v1 = m, v2 = m, u1 = m, u2 = m;
      double hv1 = -std::numeric_limits<double>::infinity(), hv2 = hv1;
      double hu1 = std::numeric_limits<double>::infinity(), hu2 = hu1;
      for (std::size_t b = 0; b < m; ++b) {
        const double hv = f[b] - lambda * d[b];
        if (hv > hv1) {
          hv2 = hv1; v2 = v1; hv1 = hv; v1 = b;
        } else if (hv > hv2) {
          hv2 = hv; v2 = b;
        }
        const double hu = f[b] + lambda * d[b];
        if (hu < hu1) {
          hu2 = hu1; u2 = u1; hu1 = hu; u1 = b;
        } else if (hu < hu2) {
          hu2 = hu; u2 = b;
        }
      }
      std::size_t nu = u1, nv = v1;
      if (u1 == v1) {
        if (hv1 - hu2 >= hv2 - hu1) {
          nu = u2;
        } else {
          nv = v2;
        }
      }
      const double ratio = (f[nv] - f[nu]) / (d[nu] + d[nv]);
      if (!(ratio > lambda)) break;
      lambda = ratio;
      u = nu;
      v = nv;
    }
    return interpolate(u, v, d);
  }

  /// Reference evaluation scanning all ordered pairs; ties keep the
  /// lexicographically first (u, v).
  [[nodiscard]] double predict_exhaustive(std::span<const double> dist) const {
    std::vector<double> d;
    if (auto hit = prepare(dist, d)) return *hit;
    const std::size_t m = size();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bu = 0, bv = 1;
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t v = 0; v < m; ++v) {
        if (u == v) continue;
        const double r = (labels_[v] - labels_[u]) / (d[u] + d[v]);
        if (r > best) {
          best = r;
          bu = u;
          bv = v;
        }
      }
    }
    return interpolate(bu, bv, d);
  }

  /// Distances from a coordinate vector to every net point.
  [[nodiscard]] std::vector<double> distances_to(std::span<const double> x) const {
    std::vector<double> dist(size());
    for (std::size_t a = 0; a < size(); ++a) dist[a] = coordinate_distance(kind_, x, point(a));
    return dist;
  }

 private:
  // Fills d with rho^beta; returns the answer directly when it needs no search.
  std::optional<double> prepare(std::span<const double> dist, std::vector<double>& d) const {
    if (dist.size() != size())
      throw std::invalid_argument("expected one distance per net point");
    for (std::size_t a = 0; a < size(); ++a) {
      if (!(dist[a] >= 0.0)) throw std::invalid_argument("distances must be nonnegative");
      if (dist[a] == 0.0) return labels_[a];
    }
    if (size() == 1) return labels_[0];
    d.resize(size());
    for (std::size_t a = 0; a < size(); ++a) d[a] = holder_power(dist[a], beta_);
    return std::nullopt;
  }

  double interpolate(std::size_t u, std::size_t v, std::span<const double> d) const {
    const double value = labels_[u] + d[u] / (d[u] + d[v]) * (labels_[v] - labels_[u]);
    assert(value >= std::min(labels_[u], labels_[v]) - 1e-12 &&
           value <= std::max(labels_[u], labels_[v]) + 1e-12);
    return value;
  }

  MetricKind kind_ = MetricKind::euclidean;
  double beta_ = 1.0;
  double gamma_ = 1.0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> labels_;
  std::size_t trimmed_count_ = 0;
  std::vector<std::size_t> net_indices_;
};

/// Everything fit_extension computes on the way to the model.
struct ExtensionFit {
  ExtensionModel model;
  SlopeProfile slopes;                // w(X_i) of the input labels
  std::vector<std::size_t> retained;  // S', ascending index
  std::vector<std::size_t> trimmed;   // the floor(gamma n) largest-slope points
  Net net;                            // centers are sample indices
};

/// Trim the floor(gamma n) points of largest slope (ties by index), then
/// take the greedy gamma^(1/beta)-net of the rest.
inline ExtensionFit fit_extension_traced(const FiniteMetric& space, std::span<const double> values,
                                         double beta, double gamma) {
  check_exponent(beta);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
  const std::size_t n = space.size();
  if (n == 0) throw std::invalid_argument("fit_extension on an empty sample");
  if (values.size() != n) throw std::invalid_argument("values are not aligned with points");
  for (double y : values)
    if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("values must lie in [0, 1]");

  const double trim = std::floor(gamma * static_cast<double>(n));
  if (trim >= static_cast<double>(n))
    throw std::invalid_argument("gamma trims every sample point (floor(gamma n) >= n)");
  const auto trimmed_count = static_cast<std::size_t>(trim);

  ExtensionFit fit;
  fit.slopes = empirical_smoothness(space, values, beta, IsolatedPoint::zero);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& w = fit.slopes.per_point_slope;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
  fit.retained.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(trimmed_count));
  fit.trimmed.assign(order.end() - static_cast<std::ptrdiff_t>(trimmed_count), order.end());
  std::sort(fit.retained.begin(), fit.retained.end());

  fit.net = greedy_net(space, std::span<const std::size_t>(fit.retained), std::pow(gamma, 1.0 / beta));

  std::vector<Point> points;
  std::vector<double> labels;
  for (auto c : fit.net.centers) {
    if (space.has_coordinates()) {
      auto p = space.point(c);
      points.emplace_back(p.begin(), p.end());
    } else {
      points.push_back({static_cast<double>(c)});
    }
    labels.push_back(values[c]);
  }
  fit.model = ExtensionModel(space.kind(), beta, gamma, std::move(points), std::move(labels),
                             trimmed_count, fit.net.centers);
  return fit;
}

inline ExtensionModel fit_extension(const FiniteMetric& space, std::span<const double> values,
                                    double beta, double gamma) {
  return fit_extension_traced(space, values, beta, gamma).model;
}

inline ExtensionModel fit_extension(const LabeledSample& sample, double beta, double gamma) {
  return fit_extension(sample.space(), sample.labels(), beta, gamma);
}

/// Prediction at point j of the training space (any metric kind).
inline double predict_at(const ExtensionModel& model, const FiniteMetric& space, std::size_t j) {
  if (model.net_indices().size() != model.size())
    throw std::invalid_argument("model does not record its net indices");
  std::vector<double> dist(model.size());
  for (std::size_t a = 0; a < model.size(); ++a) dist[a] = space.distance(j, model.net_indices()[a]);
  return model.predict_from_distances(dist);
}

}  // namespace avgsmooth
