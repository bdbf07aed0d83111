#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "avgsmooth/metric.hpp"
#include "avgsmooth/rng.hpp"
#include "avgsmooth/smoothness.hpp"

namespace avgsmooth {

enum class SpaceKind { interval, cube, finite };
enum class DensityKind { uniform, spike_mixture };
enum class NoiseKind { none, uniform, flip };

inline std::string_view to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::interval: return "interval";
    case SpaceKind::cube: return "cube";
    case SpaceKind::finite: return "finite";
  }
  return "unknown";
}

inline std::string_view to_string(DensityKind k) {
  return k == DensityKind::uniform ? "uniform" : "spike_mixture";
}

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::flip: return "flip";
  }
  return "unknown";
}

/// [0,1] (interval), [0,1]^dim (cube), or an explicit finite support.
struct SpaceSpec {
  SpaceKind kind = SpaceKind::interval;
  unsigned dim = 1;
  MetricKind metric = MetricKind::euclidean;
  std::vector<Point> points;    // finite only
  std::vector<double> weights;  // finite only: probability of each point
};

/// Marginal of the first coordinate. spike_mixture puts `mass` uniformly on
/// [center - half_width, center + half_width] and the rest uniformly on the
/// complement in [0, 1]. Remaining coordinates are uniform.
struct DensitySpec {
  DensityKind kind = DensityKind::uniform;
  double center = 0.5;
  double half_width = 0.0;
  double mass = 0.0;
};

/// Piecewise-linear function of the first coordinate through the knots
/// (knots_x ascending, first 0, last 1). For finite spaces, one value per point.
struct TargetSpec {
  std::vector<double> knots_x{0.0, 1.0};
  std::vector<double> knots_y{0.5, 0.5};
  std::vector<double> values;  // finite only
};

/// none; uniform: Y = f(x) + U(-m, m) reflected into [0, 1];
/// flip: with probability q, Y is replaced by an independent U(0, 1).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double magnitude = 0.0;  // m or q
};

struct Scenario {
  SpaceSpec space;
  DensitySpec density;
  TargetSpec target;
  NoiseSpec noise;
  double beta = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline bool is_continuous(const Scenario& s) { return s.space.kind != SpaceKind::finite; }

inline double reflect_unit(double y) {
  if (y < 0.0) return -y;
  if (y > 1.0) return 2.0 - y;
  return y;
}

// E|a - U[lo, hi]|.
inline double mean_abs_to_uniform(double a, double lo, double hi) {
  if (!(hi > lo)) return std::abs(a - lo);
  if (a <= lo || a >= hi) return std::abs(a - 0.5 * (lo + hi));
  return ((a - lo) * (a - lo) + (hi - a) * (hi - a)) / (2.0 * (hi - lo));
}

}  // namespace detail

inline void validate(const Scenario& s) {
  check_exponent(s.beta);
  const auto& sp = s.space;
  if (sp.kind == SpaceKind::finite) {
    if (sp.points.empty()) throw std::invalid_argument("finite space without points");
    if (sp.weights.size() != sp.points.size()) throw std::invalid_argument("one weight per finite point");
    if (s.target.values.size() != sp.points.size()) throw std::invalid_argument("one target value per finite point");
    double total = 0.0;
    for (double w : sp.weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
    for (double v : s.target.values)
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("target values must lie in [0, 1]");
  } else {
    if (sp.dim == 0) throw std::invalid_argument("dimension must be positive");
    if (sp.kind == SpaceKind::interval && sp.dim != 1) throw std::invalid_argument("an interval has dimension 1");
    if (sp.metric == MetricKind::matrix) throw std::invalid_argument("continuous spaces need a coordinate metric");
    const auto& t = s.target;
    if (t.knots_x.size() < 2 || t.knots_x.size() != t.knots_y.size())
      throw std::invalid_argument("target needs at least two aligned knots");
    if (t.knots_x.front() != 0.0 || t.knots_x.back() != 1.0)
      throw std::invalid_argument("target knots must span [0, 1]");
    for (std::size_t k = 1; k < t.knots_x.size(); ++k)
      if (!(t.knots_x[k] > t.knots_x[k - 1])) throw std::invalid_argument("target knots must increase");
    for (double v : t.knots_y)
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("target values must lie in [0, 1]");
    const auto& d = s.density;
    if (d.kind == DensityKind::spike_mixture) {
      if (!(d.half_width > 0.0) || d.center - d.half_width < 0.0 || d.center + d.half_width > 1.0)
        throw std::invalid_argument("spike region must lie inside [0, 1]");
      if (!(d.mass >= 0.0 && d.mass <= 1.0)) throw std::invalid_argument("spike mass must lie in [0, 1]");
      if (2.0 * d.half_width >= 1.0 && d.mass < 1.0)
        throw std::invalid_argument("spike region leaves no room for the remaining mass");
    }
  }
  const auto& nz = s.noise;
  if (nz.kind == NoiseKind::uniform && !(nz.magnitude >= 0.0 && nz.magnitude <= 1.0))
    throw std::invalid_argument("uniform noise magnitude must lie in [0, 1]");
  if (nz.kind == NoiseKind::flip && !(nz.magnitude >= 0.0 && nz.magnitude <= 1.0))
    throw std::invalid_argument("flip probability must lie in [0, 1]");
}

/// f*(x) for a continuous scenario.
inline double target_value(const Scenario& s, double x1) {
  const auto& kx = s.target.knots_x;
  const auto& ky = s.target.knots_y;
  if (x1 <= kx.front()) return ky.front();
  if (x1 >= kx.back()) return ky.back();
  const auto it = std::upper_bound(kx.begin(), kx.end(), x1);
  const auto k = static_cast<std::size_t>(it - kx.begin());
  const double t = (x1 - kx[k - 1]) / (kx[k] - kx[k - 1]);
  return ky[k - 1] + t * (ky[k] - ky[k - 1]);
}

inline double target_value(const Scenario& s, std::span<const double> x) { return target_value(s, x[0]); }

/// Density of the first coordinate at x1 (continuous scenarios).
inline double density_value(const Scenario& s, double x1) {
  if (x1 < 0.0 || x1 > 1.0) return 0.0;
  const auto& d = s.density;
  if (d.kind == DensityKind::uniform) return 1.0;
  const bool inside = std::abs(x1 - d.center) <= d.half_width;
  return inside ? d.mass / (2.0 * d.half_width) : (1.0 - d.mass) / (1.0 - 2.0 * d.half_width);
}

/// Draws one first coordinate: two uniforms for a mixture, one otherwise.
inline double draw_first_coordinate(const Scenario& s, CounterRng& rng) {
  const auto& d = s.density;
  if (d.kind == DensityKind::uniform) return rng.uniform();
  const double lo = d.center - d.half_width, hi = d.center + d.half_width;
  const bool inside = rng.uniform() < d.mass;
  const double u = rng.uniform();
  if (inside) return lo + u * (hi - lo);
  const double outside = 1.0 - (hi - lo);
  const double pos = u * outside;
  return pos < lo ? pos : hi + (pos - lo);
}

/// Noisy label for target value v; one uniform for additive noise, two for flips.
inline double draw_label(const NoiseSpec& noise, double v, CounterRng& rng) {
  switch (noise.kind) {
    case NoiseKind::none: return v;
    case NoiseKind::uniform: return detail::reflect_unit(v + noise.magnitude * (2.0 * rng.uniform() - 1.0));
    case NoiseKind::flip: {
      const bool flip = rng.uniform() < noise.magnitude;
      const double u = rng.uniform();
      return flip ? u : v;
    }
  }
  return v;
}

/// A sample with the scenario's seed (or `seed` when given). Each point
/// consumes its coordinate draws, then its label draws, from one CounterRng.
struct ScenarioSample {
  LabeledSample sample;
  std::vector<std::size_t> support_index;  // finite scenarios: drawn support point
};

inline ScenarioSample sample_traced(const Scenario& s, std::size_t n, std::optional<std::uint64_t> seed = {}) {
  validate(s);
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  CounterRng rng(seed.value_or(s.seed));
  std::vector<Point> points(n);
  std::vector<double> labels(n);
  ScenarioSample out;
  if (s.space.kind == SpaceKind::finite) {
    std::vector<double> cdf(s.space.weights.size());
    std::partial_sum(s.space.weights.begin(), s.space.weights.end(), cdf.begin());
    out.support_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform() * cdf.back();
      auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      k = std::min(k, cdf.size() - 1);
      out.support_index[i] = k;
      points[i] = s.space.points[k];
      labels[i] = draw_label(s.noise, s.target.values[k], rng);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      Point p(s.space.dim);
      p[0] = draw_first_coordinate(s, rng);
      for (std::size_t c = 1; c < p.size(); ++c) p[c] = rng.uniform();
      labels[i] = draw_label(s.noise, target_value(s, p[0]), rng);
      points[i] = std::move(p);
    }
  }
  out.sample = LabeledSample(FiniteMetric::from_points(s.space.metric, points), std::move(labels));
  return out;
}

inline LabeledSample sample(const Scenario& s, std::size_t n, std::optional<std::uint64_t> seed = {}) {
  return sample_traced(s, n, seed).sample;
}

/// Exact beta-slope of the target at x1 over the whole space. A point
/// differing from x only in the first coordinate realizes every first-coordinate
/// distance, so cubes reduce to the interval.
inline double target_slope(const Scenario& s, double x1) {
  const auto& kx = s.target.knots_x;
  const auto& ky = s.target.knots_y;
  const double beta = s.beta;
  const double fx = target_value(s, x1);
  double best = 0.0;
  auto ratio = [&](double y) {
    const double dist = std::abs(y - x1);
    if (dist <= 0.0) return 0.0;
    return std::abs(fx - target_value(s, y)) / holder_power(dist, beta);
  };
  for (std::size_t k = 1; k < kx.size(); ++k) {
    const double a = kx[k - 1], b = kx[k];
    const double slope = (ky[k] - ky[k - 1]) / (b - a);
    // On this piece f(y) = line(y) and fx - f(y) = A - slope (y - x1).
    const double A = fx - (ky[k - 1] + slope * (x1 - a));
    const bool on_piece = std::abs(A) <= 1e-15 && x1 >= a && x1 <= b;
    if (on_piece || (std::abs(A) <= 1e-15 && (x1 == a || x1 == b))) {
      // Same line through x: the ratio is |slope| |t|^(1 - beta), largest at the far end.
      const double reach = std::max(std::abs(a - x1), std::abs(b - x1));
      if (beta == 1.0) best = std::max(best, std::abs(slope));
      else if (reach > 0.0) best = std::max(best, std::abs(slope) * std::pow(reach, 1.0 - beta));
      continue;
    }
    best = std::max({best, ratio(a), ratio(b)});
    if (beta < 1.0 && slope != 0.0) {
      // The only interior stationary point of |A - slope t| |t|^(-beta), t = y - x.
      const double t = -beta * A / (slope * (1.0 - beta));
      const double y = x1 + t;
      if (y > a && y < b) best = std::max(best, ratio(y));
    }
  }
  return best;
}

namespace detail {

// Breakpoints of the first-coordinate integrands: knots and density edges.
inline std::vector<double> breakpoints(const Scenario& s) {
  std::vector<double> bp(s.target.knots_x.begin(), s.target.knots_x.end());
  if (s.density.kind == DensityKind::spike_mixture) {
    bp.push_back(s.density.center - s.density.half_width);
    bp.push_back(s.density.center + s.density.half_width);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return bp;
}

inline double integrate_against_density(const Scenario& s, const std::function<double(double)>& g,
                                        std::span<const double> extra_breaks = {}) {
  using boost::math::quadrature::gauss_kronrod;
  auto bp = breakpoints(s);
  bp.insert(bp.end(), extra_breaks.begin(), extra_breaks.end());
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  double total = 0.0;
  for (std::size_t k = 1; k < bp.size(); ++k) {
    const double a = bp[k - 1], b = bp[k];
    if (!(b > a)) continue;
    const double dens = density_value(s, 0.5 * (a + b));
    if (dens == 0.0) continue;
    total += dens * gauss_kronrod<double, 61>::integrate(g, a, b, 15, 1e-12);
  }
  return total;
}

}  // namespace detail

/// Exact average slope of the target under mu.
inline double true_average_smoothness(const Scenario& s) {
  validate(s);
  if (s.space.kind == SpaceKind::finite) {
    const auto space = FiniteMetric::from_points(s.space.metric, s.space.points);
    const auto prof = empirical_smoothness(space, s.target.values, s.beta, IsolatedPoint::zero);
    double avg = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) avg += s.space.weights[i] * prof.per_point_slope[i];
    return avg;
  }
  // Slopes have kinks where the farthest or steepest partner switches; the
  // adaptive rule resolves them, knots and density edges are split exactly.
  return detail::integrate_against_density(s, [&](double x) { return target_slope(s, x); });
}

/// Worst-case beta-slope of the target: max over the knots, the piece
/// midpoints and a fine grid (exact for beta = 1).
inline double target_holder_seminorm(const Scenario& s) {
  validate(s);
  if (s.space.kind == SpaceKind::finite) {
    const auto space = FiniteMetric::from_points(s.space.metric, s.space.points);
    return holder_seminorm(space, s.target.values, s.beta);
  }
  double best = 0.0;
  const auto& kx = s.target.knots_x;
  for (std::size_t k = 0; k < kx.size(); ++k) {
    best = std::max(best, target_slope(s, kx[k]));
    if (k > 0) best = std::max(best, target_slope(s, 0.5 * (kx[k - 1] + kx[k])));
  }
  for (int g = 0; g <= 10000; ++g) best = std::max(best, target_slope(s, g / 10000.0));
  return best;
}

/// E|a - Y| given that the target value at X is v.
inline double conditional_loss(const NoiseSpec& noise, double v, double a) {
  switch (noise.kind) {
    case NoiseKind::none: return std::abs(a - v);
    case NoiseKind::flip:
      return (1.0 - noise.magnitude) * std::abs(a - v) + noise.magnitude * detail::mean_abs_to_uniform(a, 0.0, 1.0);
    case NoiseKind::uniform: {
      const double m = noise.magnitude;
      if (m == 0.0) return std::abs(a - v);
      const double lo = v - m, hi = v + m;
      const double inv = 1.0 / (2.0 * m);
      double total = 0.0;
      const double in_lo = std::max(0.0, lo), in_hi = std::min(1.0, hi);
      if (in_hi > in_lo) total += (in_hi - in_lo) * inv * detail::mean_abs_to_uniform(a, in_lo, in_hi);
      if (hi > 1.0) total += (hi - 1.0) * inv * detail::mean_abs_to_uniform(a, 2.0 - hi, 1.0);
      if (lo < 0.0) total += (-lo) * inv * detail::mean_abs_to_uniform(a, 0.0, -lo);
      return total;
    }
  }
  return std::abs(a - v);
}

/// L_D(f*) for the scenario's own target.
inline double bayes_risk(const Scenario& s) {
  validate(s);
  if (s.noise.kind == NoiseKind::none) return 0.0;
  if (s.space.kind == SpaceKind::finite) {
    double r = 0.0;
    for (std::size_t i = 0; i < s.space.points.size(); ++i) {
      const double v = s.target.values[i];
      r += s.space.weights[i] * conditional_loss(s.noise, v, v);
    }
    return r;
  }
  // Reflection creates kinks where v = m or v = 1 - m; split there.
  std::vector<double> extra;
  if (s.noise.kind == NoiseKind::uniform) {
    const auto& kx = s.target.knots_x;
    const auto& ky = s.target.knots_y;
    for (double level : {s.noise.magnitude, 1.0 - s.noise.magnitude})
      for (std::size_t k = 1; k < kx.size(); ++k)
        if ((ky[k - 1] - level) * (ky[k] - level) < 0.0)
          extra.push_back(kx[k - 1] + (level - ky[k - 1]) / (ky[k] - ky[k - 1]) * (kx[k] - kx[k - 1]));
  }
  return detail::integrate_against_density(
      s, [&](double x) { const double v = target_value(s, x); return conditional_loss(s.noise, v, v); }, extra);
}

/// Monte Carlo estimate of L_D(g) - L_D(f*) over fresh draws of X, using the
/// exact conditional loss given X (no label noise in the estimate).
struct ExcessEstimate {
  double excess = 0.0;
  double standard_error = 0.0;
  double risk = 0.0;  // estimate of L_D(g)
};

template <class Predictor>
ExcessEstimate excess_risk_monte_carlo(const Scenario& s, Predictor&& predict, std::size_t draws,
                                       std::uint64_t seed) {
  validate(s);
  if (draws < 2) throw std::invalid_argument("need at least two Monte Carlo draws");
  CounterRng rng(seed);
  double mean = 0.0, m2 = 0.0, risk = 0.0;
  std::vector<double> cdf;
  if (s.space.kind == SpaceKind::finite) {
    cdf.resize(s.space.weights.size());
    std::partial_sum(s.space.weights.begin(), s.space.weights.end(), cdf.begin());
  }
  Point p(s.space.kind == SpaceKind::finite ? s.space.points.front().size() : s.space.dim);
  for (std::size_t k = 0; k < draws; ++k) {
    double v;
    if (s.space.kind == SpaceKind::finite) {
      auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * cdf.back()) - cdf.begin());
      idx = std::min(idx, cdf.size() - 1);
      p = s.space.points[idx];
      v = s.target.values[idx];
    } else {
      p[0] = draw_first_coordinate(s, rng);
      for (std::size_t c = 1; c < p.size(); ++c) p[c] = rng.uniform();
      v = target_value(s, p[0]);
    }
    const double a = predict(std::span<const double>(p));
    const double la = conditional_loss(s.noise, v, a);
    const double d = la - conditional_loss(s.noise, v, v);
    risk += la;
    const double delta = d - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (d - mean);
  }
  ExcessEstimate out;
  out.excess = mean;
  out.standard_error = std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws));
  out.risk = risk / static_cast<double>(draws);
  return out;
}

/// Flat level `base` with a triangular spike of height `height` and half-width
/// `spike_half_width` at `center`; the density puts `spike_mass` on the
/// low-density region of half-width `region_half_width` around the spike.
inline Scenario spike_scenario(double base, double height, double spike_half_width, double center,
                               double region_half_width, double spike_mass, NoiseSpec noise,
                               std::uint64_t seed = 0) {
  Scenario s;
  s.space.kind = SpaceKind::interval;
  s.density = {DensityKind::spike_mixture, center, region_half_width, spike_mass};
  s.target.knots_x = {0.0, center - spike_half_width, center, center + spike_half_width, 1.0};
  s.target.knots_y = {base, base, base + height, base, base};
  s.noise = noise;
  s.seed = seed;
  validate(s);
  return s;
}

/// Uniform interval scenario with a piecewise-linear target.
inline Scenario interval_scenario(std::vector<double> knots_x, std::vector<double> knots_y, NoiseSpec noise,
                                  std::uint64_t seed = 0) {
  Scenario s;
  s.space.kind = SpaceKind::interval;
  s.target.knots_x = std::move(knots_x);
  s.target.knots_y = std::move(knots_y);
  s.noise = noise;
  s.seed = seed;
  validate(s);
  return s;
}

}  // namespace avgsmooth
