#pragma once

// JSON formats. Requires the single-header nlohmann/json (json.hpp) on the include path.
//
//   dataset   {"metric": "euclidean"|"linf", "points": [[...], ...], "labels": [...]}
//             {"metric": "matrix", "dist": [[...], ...], "labels": [...]}
//   model     {"metric": ..., "beta": b, "gamma": g, "trimmed_count": k,
//              "net": [{"point": [...], "label": y}, ...]}
//   scenario  {"space": {...}, "density": {...}, "target": {...}, "noise": {...},
//              "beta": b, "seed": s}
//
// Doubles are written in the shortest form that parses back to the same value.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgsmooth/bounds.hpp"
#include "avgsmooth/extension.hpp"
#include "avgsmooth/learner.hpp"
#include "avgsmooth/metric.hpp"
#include "avgsmooth/smoothness.hpp"
#include "avgsmooth/synthetic.hpp"

namespace avgsmooth::io {

using nlohmann::json;

/// Malformed input files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace detail {

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_field<T>(j, key);
}

template <class F>
auto rethrow_as_format(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
}

}  // namespace detail

// ---- metric spaces and datasets ----------------------------------------

inline FiniteMetric metric_from_json(const json& j) {
  return detail::rethrow_as_format([&] {
    const auto kind = metric_kind_from_string(detail::get_field<std::string>(j, "metric"));
    if (kind == MetricKind::matrix)
      return FiniteMetric::from_matrix(detail::get_field<std::vector<std::vector<double>>>(j, "dist"));
    return FiniteMetric::from_points(kind, detail::get_field<std::vector<Point>>(j, "points"));
  });
}

inline json metric_to_json(const FiniteMetric& space) {
  json j;
  j["metric"] = std::string(to_string(space.kind()));
  if (space.kind() == MetricKind::matrix) {
    std::vector<std::vector<double>> dist(space.size(), std::vector<double>(space.size()));
    for (std::size_t a = 0; a < space.size(); ++a)
      for (std::size_t b = 0; b < space.size(); ++b) dist[a][b] = space.raw_distance(a, b);
    j["dist"] = dist;
  } else {
    std::vector<Point> points;
    for (std::size_t a = 0; a < space.size(); ++a) {
      const auto p = space.point(a);
      points.emplace_back(p.begin(), p.end());
    }
    j["points"] = points;
  }
  return j;
}

inline LabeledSample dataset_from_json(const json& j) {
  auto space = metric_from_json(j);
  auto labels = detail::get_field<std::vector<double>>(j, "labels");
  return detail::rethrow_as_format([&] { return LabeledSample(std::move(space), std::move(labels)); });
}

inline json dataset_to_json(const LabeledSample& sample) {
  json j = metric_to_json(sample.space());
  j["labels"] = std::vector<double>(sample.labels().begin(), sample.labels().end());
  return j;
}

// ---- models --------------------------------------------------------------

inline json model_to_json(const ExtensionModel& m) {
  json j;
  j["metric"] = std::string(to_string(m.kind()));
  j["beta"] = m.beta();
  j["gamma"] = m.gamma();
  j["trimmed_count"] = m.trimmed_count();
  json net = json::array();
  for (std::size_t a = 0; a < m.size(); ++a) {
    const auto p = m.point(a);
    net.push_back({{"point", std::vector<double>(p.begin(), p.end())}, {"label", m.labels()[a]}});
  }
  j["net"] = std::move(net);
  if (!m.net_indices().empty())
    j["net_indices"] = std::vector<std::size_t>(m.net_indices().begin(), m.net_indices().end());
  return j;
}

inline ExtensionModel model_from_json(const json& j) {
  return detail::rethrow_as_format([&] {
    const auto kind = metric_kind_from_string(detail::get_field<std::string>(j, "metric"));
    const auto net = detail::get_field<json>(j, "net");
    if (!net.is_array()) throw FormatError("field 'net' must be an array");
    std::vector<Point> points;
    std::vector<double> labels;
    for (const auto& e : net) {
      points.push_back(detail::get_field<Point>(e, "point"));
      labels.push_back(detail::get_field<double>(e, "label"));
    }
    return ExtensionModel(kind, detail::get_field<double>(j, "beta"), detail::get_field<double>(j, "gamma"),
                          std::move(points), std::move(labels),
                          detail::get_or<std::size_t>(j, "trimmed_count", 0),
                          detail::get_or<std::vector<std::size_t>>(j, "net_indices", {}));
  });
}

// ---- learner configuration and reports ----------------------------------

inline LearnerConfig config_from_json(const json& j) {
  LearnerConfig c;
  c.beta = detail::get_or(j, "beta", c.beta);
  c.L = detail::get_or(j, "L", c.L);
  c.epsilon = detail::get_or(j, "epsilon", c.epsilon);
  c.delta = detail::get_or(j, "delta", c.delta);
  detail::rethrow_as_format([&] { c.validate(); return 0; });
  return c;
}

inline json config_to_json(const LearnerConfig& c) {
  return {{"beta", c.beta}, {"L", c.L}, {"epsilon", c.epsilon}, {"delta", c.delta}};
}

inline json slope_profile_to_json(const SlopeProfile& p) {
  return {{"beta", p.beta},
          {"per_point_slope", p.per_point_slope},
          {"empirical_avg", p.empirical_avg},
          {"max_slope", p.max_slope}};
}

inline json bound_report_to_json(const BoundReport& r) {
  return {{"inputs",
           {{"epsilon", r.epsilon},
            {"alpha", r.alpha},
            {"L", r.L},
            {"beta", r.beta},
            {"delta", r.delta},
            {"n", r.n},
            {"covering", r.covering_id}}},
          {"bracketing_entropy_bound", r.bracketing_entropy_bound},
          {"deviation_bound", r.deviation_bound},
          {"sample_complexity", r.sample_complexity},
          {"rate_exponent", r.rate_exponent}};
}

// ---- scenarios -----------------------------------------------------------

inline json scenario_to_json(const Scenario& s) {
  json space{{"kind", std::string(to_string(s.space.kind))},
             {"dim", s.space.dim},
             {"metric", std::string(to_string(s.space.metric))}};
  if (s.space.kind == SpaceKind::finite) {
    space["points"] = s.space.points;
    space["weights"] = s.space.weights;
  }
  json target;
  if (s.space.kind == SpaceKind::finite) {
    target["values"] = s.target.values;
  } else {
    target["knots_x"] = s.target.knots_x;
    target["knots_y"] = s.target.knots_y;
  }
  return {{"space", space},
          {"density",
           {{"kind", std::string(to_string(s.density.kind))},
            {"center", s.density.center},
            {"half_width", s.density.half_width},
            {"mass", s.density.mass}}},
          {"target", target},
          {"noise", {{"kind", std::string(to_string(s.noise.kind))}, {"magnitude", s.noise.magnitude}}},
          {"beta", s.beta},
          {"seed", s.seed}};
}

inline Scenario scenario_from_json(const json& j) {
  return detail::rethrow_as_format([&] {
    Scenario s;
    const json space = detail::get_or(j, "space", json::object());
    const auto kind = detail::get_or<std::string>(space, "kind", "interval");
    if (kind == "interval") s.space.kind = SpaceKind::interval;
    else if (kind == "cube") s.space.kind = SpaceKind::cube;
    else if (kind == "finite") s.space.kind = SpaceKind::finite;
    else throw FormatError("unknown space kind '" + kind + "'");
    s.space.dim = detail::get_or<unsigned>(space, "dim", 1);
    s.space.metric = metric_kind_from_string(detail::get_or<std::string>(space, "metric", "euclidean"));
    s.space.points = detail::get_or<std::vector<Point>>(space, "points", {});
    s.space.weights = detail::get_or<std::vector<double>>(space, "weights", {});

    const json density = detail::get_or(j, "density", json::object());
    const auto dkind = detail::get_or<std::string>(density, "kind", "uniform");
    if (dkind == "uniform") s.density.kind = DensityKind::uniform;
    else if (dkind == "spike_mixture") s.density.kind = DensityKind::spike_mixture;
    else throw FormatError("unknown density kind '" + dkind + "'");
    s.density.center = detail::get_or(density, "center", s.density.center);
    s.density.half_width = detail::get_or(density, "half_width", s.density.half_width);
    s.density.mass = detail::get_or(density, "mass", s.density.mass);

    const json target = detail::get_or(j, "target", json::object());
    s.target.knots_x = detail::get_or(target, "knots_x", s.target.knots_x);
    s.target.knots_y = detail::get_or(target, "knots_y", s.target.knots_y);
    s.target.values = detail::get_or<std::vector<double>>(target, "values", {});

    const json noise = detail::get_or(j, "noise", json::object());
    const auto nkind = detail::get_or<std::string>(noise, "kind", "none");
    if (nkind == "none") s.noise.kind = NoiseKind::none;
    else if (nkind == "uniform") s.noise.kind = NoiseKind::uniform;
    else if (nkind == "flip") s.noise.kind = NoiseKind::flip;
    else throw FormatError("unknown noise kind '" + nkind + "'");
    s.noise.magnitude = detail::get_or(noise, "magnitude", 0.0);

    s.beta = detail::get_or(j, "beta", 1.0);
    s.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    validate(s);
    return s;
  });
}

}  // namespace avgsmooth::io
