#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "avgsmooth/detail/set_cover.hpp"
#include "avgsmooth/rng.hpp"

namespace avgsmooth {

enum class MetricKind { euclidean, linf, matrix };

inline std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::linf: return "linf";
    case MetricKind::matrix: return "matrix";
  }
  return "unknown";
}

inline MetricKind metric_kind_from_string(std::string_view name) {
  if (name == "euclidean") return MetricKind::euclidean;
  if (name == "linf" || name == "l_infinity") return MetricKind::linf;
  if (name == "matrix" || name == "explicit_matrix") return MetricKind::matrix;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

using Point = std::vector<double>;

/// Distance between two coordinate vectors of equal length.
inline double coordinate_distance(MetricKind kind, std::span<const double> a,
                                  std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  if (kind == MetricKind::euclidean) {
    if (a.size() == 1) return std::abs(a[0] - b[0]);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  }
  if (kind == MetricKind::linf) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
  }
  throw std::invalid_argument("coordinate distance requested for a matrix metric");
}

/// A finite point set with a metric: coordinates under euclidean/linf, or an
/// explicit symmetric distance matrix. Immutable after construction.
class FiniteMetric {
 public:
  /// Full triangle-inequality validation up to this many points; sampled above.
  static constexpr std::size_t kFullTriangleCheckLimit = 2000;

  FiniteMetric() = default;

  static FiniteMetric from_points(MetricKind kind, const std::vector<Point>& points) {
    if (kind == MetricKind::matrix)
      throw std::invalid_argument("from_points needs a coordinate metric");
    FiniteMetric m;
    m.kind_ = kind;
    m.size_ = points.size();
    m.dim_ = points.empty() ? 0 : points.front().size();
    if (!points.empty() && m.dim_ == 0) throw std::invalid_argument("points have no coordinates");
    m.coords_.reserve(m.size_ * m.dim_);
    for (const auto& p : points) {
      if (p.size() != m.dim_) throw std::invalid_argument("points have inconsistent dimension");
      for (double c : p) {
        if (!std::isfinite(c)) throw std::invalid_argument("non-finite coordinate");
        m.coords_.push_back(c);
      }
    }
    return m;
  }

  /// One-dimensional convenience constructor.
  static FiniteMetric on_line(std::span<const double> xs) {
    std::vector<Point> pts;
    pts.reserve(xs.size());
    for (double x : xs) pts.push_back({x});
    return from_points(MetricKind::euclidean, pts);
  }

  static FiniteMetric from_matrix(const std::vector<std::vector<double>>& dist) {
    FiniteMetric m;
    m.kind_ = MetricKind::matrix;
    m.size_ = dist.size();
    m.dist_.reserve(m.size_ * m.size_);
    for (const auto& row : dist) {
      if (row.size() != m.size_) throw std::invalid_argument("distance matrix is not square");
      m.dist_.insert(m.dist_.end(), row.begin(), row.end());
    }
    m.validate_matrix();
    return m;
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
  [[nodiscard]] MetricKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
  [[nodiscard]] bool has_coordinates() const noexcept { return kind_ != MetricKind::matrix; }

  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    check_index(i);
    if (!has_coordinates()) throw std::invalid_argument("matrix metric has no coordinates");
    return {coords_.data() + i * dim_, dim_};
  }

  [[nodiscard]] double distance(std::size_t i, std::size_t j) const {
    check_index(i);
    check_index(j);
    return raw_distance(i, j);
  }

  /// Distance from an arbitrary coordinate vector to point j.
  [[nodiscard]] double distance_to(std::span<const double> x, std::size_t j) const {
    return coordinate_distance(kind_, x, point(j));
  }

  /// Unchecked distance for hot loops.
  [[nodiscard]] double raw_distance(std::size_t i, std::size_t j) const noexcept {
    if (kind_ == MetricKind::matrix) return dist_[i * size_ + j];
    const double* a = coords_.data() + i * dim_;
    const double* b = coords_.data() + j * dim_;
    if (dim_ == 1) return std::abs(a[0] - b[0]);
    if (kind_ == MetricKind::euclidean) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      return std::sqrt(s);
    }
    double m = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
  }

  /// Restriction to the listed points, in the listed order.
  [[nodiscard]] FiniteMetric subset(std::span<const std::size_t> idx) const {
    FiniteMetric m;
    m.kind_ = kind_;
    m.size_ = idx.size();
    m.dim_ = dim_;
    if (has_coordinates()) {
      m.coords_.reserve(idx.size() * dim_);
      for (auto i : idx) {
        auto p = point(i);
        m.coords_.insert(m.coords_.end(), p.begin(), p.end());
      }
    } else {
      m.dist_.reserve(idx.size() * idx.size());
      for (auto i : idx)
        for (auto j : idx) m.dist_.push_back(distance(i, j));
    }
    return m;
  }

  [[nodiscard]] double diameter() const noexcept {
    double d = 0.0;
    for (std::size_t i = 0; i < size_; ++i)
      for (std::size_t j = i + 1; j < size_; ++j) d = std::max(d, raw_distance(i, j));
    return d;
  }

  [[nodiscard]] const std::vector<double>& coordinates() const noexcept { return coords_; }

 private:
  void check_index(std::size_t i) const {
    if (i >= size_)
      throw std::out_of_range("point index " + std::to_string(i) + " out of range (size " +
                              std::to_string(size_) + ")");
  }

  void validate_matrix() const {
    const std::size_t k = size_;
    double scale = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double d = dist_[i * k + j];
        if (!std::isfinite(d) || d < 0.0)
          throw std::invalid_argument("distance matrix has a negative or non-finite entry");
        if (d != dist_[j * k + i]) throw std::invalid_argument("distance matrix is not symmetric");
        scale = std::max(scale, d);
      }
      if (dist_[i * k + i] != 0.0) throw std::invalid_argument("distance matrix diagonal is not zero");
    }
    // Slack for matrices produced by floating-point computation.
    const double slack = 1e-12 * std::max(1.0, scale);
    auto violated = [&](std::size_t x, std::size_t y, std::size_t z) {
      return dist_[x * k + z] > dist_[x * k + y] + dist_[y * k + z] + slack;
    };
    if (k <= kFullTriangleCheckLimit) {
      for (std::size_t x = 0; x < k; ++x)
        for (std::size_t y = 0; y < k; ++y)
          for (std::size_t z = x + 1; z < k; ++z)
            if (violated(x, y, z))
              throw std::invalid_argument("distance matrix violates the triangle inequality");
    } else {
      CounterRng rng(0x7E57ULL + k);
      const std::size_t samples = 4 * k * k;
      for (std::size_t s = 0; s < samples; ++s) {
        const auto x = rng.below(k), y = rng.below(k), z = rng.below(k);
        if (violated(x, y, z))
          throw std::invalid_argument("distance matrix violates the triangle inequality");
      }
    }
  }

  MetricKind kind_ = MetricKind::euclidean;
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> dist_;
};

/// Anything with a point count and a pairwise distance.
template <class S>
concept MetricSpace = requires(const S& s, std::size_t i) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s.distance(i, i) } -> std::convertible_to<double>;
};

/// A t-net: centers pairwise at distance >= t, every point within t of a center.
struct Net {
  std::vector<std::size_t> centers;
  double scale = 0.0;
};

/// Greedy net over `subset`, scanned in the order given (callers pass
/// ascending indices). A point becomes a center iff its distance to every
/// existing center is >= t. Coincident points collapse onto the first one.
template <MetricSpace S>
Net greedy_net(const S& space, std::span<const std::size_t> subset, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("net scale must be positive");
  if (subset.empty()) throw std::invalid_argument("greedy_net on an empty subset");
  Net net;
  net.scale = t;
  for (auto p : subset) {
    bool separated = true;
    for (auto c : net.centers) {
      if (!(space.distance(p, c) >= t)) {
        separated = false;
        break;
      }
    }
    if (separated) net.centers.push_back(p);
  }
  return net;
}

template <MetricSpace S>
Net greedy_net(const S& space, double t) {
  std::vector<std::size_t> all(space.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return greedy_net(space, std::span<const std::size_t>(all), t);
}

template <MetricSpace S>
bool is_packing(const S& space, std::span<const std::size_t> centers, double t) {
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = a + 1; b < centers.size(); ++b)
      if (!(space.distance(centers[a], centers[b]) >= t)) return false;
  return true;
}

template <MetricSpace S>
bool is_cover(const S& space, std::span<const std::size_t> centers,
              std::span<const std::size_t> points, double t) {
  for (auto p : points) {
    bool covered = false;
    for (auto c : centers) {
      if (space.distance(p, c) <= t) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

enum class CoverMode { greedy_upper, exact };

/// Largest input accepted by CoverMode::exact.
inline constexpr std::size_t kExactCoverLimit = 12;

/// t-covering number of the whole space with centers drawn from the space.
/// greedy_upper is the size of the greedy t-net; exact enumerates covers.
template <MetricSpace S>
std::size_t covering_number(const S& space, double t, CoverMode mode) {
  if (!(t > 0.0)) throw std::invalid_argument("covering scale must be positive");
  const std::size_t k = space.size();
  if (k == 0) throw std::invalid_argument("covering number of an empty space");
  if (mode == CoverMode::greedy_upper) return greedy_net(space, t).centers.size();
  if (k > kExactCoverLimit)
    throw std::invalid_argument("exact covering number is limited to " +
                                std::to_string(kExactCoverLimit) + " points");
  std::vector<std::uint64_t> balls(k, 0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t p = 0; p < k; ++p)
      if (space.distance(c, p) <= t) balls[c] |= std::uint64_t{1} << p;
  const std::uint64_t universe = (k == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
  auto cover = detail::ExactSetCover(balls, universe).solve();
  return cover->size();  // balls contain their own centers, so a cover exists
}

/// Grid-cover count ceil(diameter / (2 epsilon))^d for a d-dimensional cube.
inline std::uint64_t interval_cover_bound(double epsilon, unsigned d, double diameter) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (d == 0) throw std::invalid_argument("dimension must be positive");
  if (!(diameter > 0.0)) throw std::invalid_argument("diameter must be positive");
  const double per_axis = std::max(1.0, std::ceil(diameter / (2.0 * epsilon)));
  const double total = std::pow(per_axis, static_cast<double>(d));
  if (!(total < 0x1.0p63)) throw std::overflow_error("interval cover count overflows");
  return static_cast<std::uint64_t>(total);
}

}  // namespace avgsmooth
