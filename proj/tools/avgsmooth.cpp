// Command-line front end: gen, slope, train, predict, bound, sweep.
//
// Exit codes: 0 success, 1 usage error, 2 malformed or invalid data,
// 3 internal failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avgsmooth/bounds.hpp"
#include "avgsmooth/extension.hpp"
#include "avgsmooth/io.hpp"
#include "avgsmooth/learner.hpp"
#include "avgsmooth/metric.hpp"
#include "avgsmooth/smoothness.hpp"
#include "avgsmooth/sweep.hpp"
#include "avgsmooth/synthetic.hpp"

namespace {

using avgsmooth::io::FormatError;
using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("failed writing output");
  }

 private:
  std::ofstream file_;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- gen -------------------------------------------------------------------

struct GenArgs {
  std::string scenario;
  std::size_t n = 100;
};

void run_gen(const Globals& g, const GenArgs& a) {
  const auto scenario = avgsmooth::io::scenario_from_json(avgsmooth::io::read_json_file(a.scenario));
  const auto sample = avgsmooth::sample(scenario, a.n, g.seed);
  Output out(g.out);
  out.stream() << avgsmooth::io::dataset_to_json(sample).dump(2) << '\n';
  out.finish();
}

// --- slope -----------------------------------------------------------------

struct SlopeArgs {
  std::string data;
  double beta = 1.0;
};

void run_slope(const Globals& g, const SlopeArgs& a) {
  const auto sample = avgsmooth::io::dataset_from_json(avgsmooth::io::read_json_file(a.data));
  avgsmooth::SlopeProfile profile;
  try {
    profile = avgsmooth::empirical_smoothness(sample.space(), sample.labels(), a.beta);
  } catch (const std::domain_error& e) {
    throw FormatError(e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  Output out(g.out);
  out.stream() << avgsmooth::io::slope_profile_to_json(profile).dump(2) << '\n';
  out.finish();
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  avgsmooth::LearnerConfig learner;
};

void run_train(const Globals& g, TrainArgs a, const CLI::App& cmd) {
  avgsmooth::LearnerConfig cfg = a.learner;
  if (!a.config.empty()) {
    cfg = avgsmooth::io::config_from_json(avgsmooth::io::read_json_file(a.config));
    // Flags given explicitly override the file.
    if (cmd.count("--beta")) cfg.beta = a.learner.beta;
    if (cmd.count("--L")) cfg.L = a.learner.L;
    if (cmd.count("--epsilon")) cfg.epsilon = a.learner.epsilon;
    if (cmd.count("--delta")) cfg.delta = a.learner.delta;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("config", e.what());
  }
  const auto sample = avgsmooth::io::dataset_from_json(avgsmooth::io::read_json_file(a.data));
  const auto outcome = avgsmooth::learn_traced(sample, cfg);
  Output out(g.out);
  out.stream() << avgsmooth::io::model_to_json(outcome.extension.model).dump(2) << '\n';
  out.finish();
  std::cerr << "n=" << sample.size() << " objective=" << format_double(outcome.relabel.objective)
            << " lambda_hat=" << format_double(outcome.relabel.achieved_smoothness)
            << " lp_status=" << avgsmooth::to_string(outcome.relabel.lp_status)
            << " net_size=" << outcome.extension.model.size() << '\n';
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string queries;
};

void run_predict(const Globals& g, const PredictArgs& a) {
  const auto model = avgsmooth::io::model_from_json(avgsmooth::io::read_json_file(a.model));
  std::ifstream in(a.queries);
  if (!in) throw FormatError("cannot open " + a.queries);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<double> predictions;
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    json q;
    try {
      q = json::parse(text);
    } catch (const json::exception& e) {
      throw FormatError(a.queries + ": " + e.what());
    }
    if (!q.is_object()) throw FormatError("query file must hold a JSON object");
    try {
      if (q.contains("points")) {
        for (const auto& p : q.at("points").get<std::vector<avgsmooth::Point>>()) {
          if (p.size() != model.dimension()) throw FormatError("query point has the wrong dimension");
          predictions.push_back(model.predict(p));
        }
      } else if (q.contains("distances")) {
        for (const auto& d : q.at("distances").get<std::vector<std::vector<double>>>())
          predictions.push_back(model.predict_from_distances(d));
      } else {
        throw FormatError("query file needs 'points' or 'distances'");
      }
    } catch (const json::exception& e) {
      throw FormatError(e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  Output out(g.out);
  if (!predictions.empty()) out.stream() << "index,prediction\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    out.stream() << i << ',' << format_double(predictions[i]) << '\n';
  out.finish();
}

// --- bound -----------------------------------------------------------------

struct BoundArgs {
  avgsmooth::LearnerConfig learner{1.0, 1.0, 0.1, 0.1};
  double alpha = 0.0;
  std::uint64_t n = 1000;
  unsigned dim = 1;
  double diameter = 1.0;
};

void run_bound(const Globals& g, const BoundArgs& a) {
  const double alpha = a.alpha > 0.0 ? a.alpha : a.learner.epsilon;
  const auto cover = [&](double t) { return avgsmooth::interval_cover_bound(t, a.dim, a.diameter); };
  std::ostringstream id;
  id << "grid:d=" << a.dim << ",diameter=" << format_double(a.diameter);
  avgsmooth::BoundReport report;
  try {
    report = avgsmooth::make_bound_report(a.learner, alpha, a.n, id.str(), cover, a.dim);
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("bound", e.what());
  }
  Output out(g.out);
  out.stream() << avgsmooth::io::bound_report_to_json(report).dump(2) << '\n';
  out.finish();
}

// --- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  std::string summary;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 0;
  std::size_t mc_draws = 0;
  bool runtime = false;
};

avgsmooth::SweepSpec sweep_spec_from_json(const json& j) {
  avgsmooth::SweepSpec spec;
  spec.scenario = avgsmooth::io::scenario_from_json(j.value("scenario", json::object()));
  spec.config = avgsmooth::io::config_from_json(j.value("config", json::object()));
  try {
    spec.n_grid = j.value("n_grid", std::vector<std::size_t>{});
    spec.trials = j.value("trials", std::size_t{1});
    spec.mc_draws = j.value("mc_draws", spec.mc_draws);
    spec.seed = j.value("seed", spec.scenario.seed);
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
  return spec;
}

void run_sweep_cmd(const Globals& g, const SweepArgs& a) {
  auto spec = sweep_spec_from_json(avgsmooth::io::read_json_file(a.spec));
  if (!a.n_grid.empty()) spec.n_grid = a.n_grid;
  if (a.trials > 0) spec.trials = a.trials;
  if (a.mc_draws > 0) spec.mc_draws = a.mc_draws;
  if (g.seed) spec.seed = *g.seed;
  spec.threads = g.threads;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }

  Output out(g.out);
  auto& os = out.stream();
  os << "n,trial,excess,lambda_hat,net_size" << (a.runtime ? ",runtime_seconds" : "") << '\n';
  const auto report = avgsmooth::run_sweep(spec, [&](const avgsmooth::SweepRow& r) {
    os << r.n << ',' << r.trial << ',' << format_double(r.excess) << ',' << format_double(r.lambda_hat) << ','
       << r.net_size;
    if (a.runtime) os << ',' << format_double(r.runtime_seconds);
    os << '\n';
    os.flush();
  });
  out.finish();

  json summary{{"n", report.n_values},
               {"mean_excess", report.mean_excess},
               {"fitted_slope", report.fitted_slope},
               {"fitted_intercept", report.fitted_intercept},
               {"predicted_slope", report.predicted_slope},
               {"bayes_risk", report.bayes_risk}};
  if (!a.summary.empty()) {
    avgsmooth::io::write_json_file(a.summary, summary);
  } else {
    std::cerr << summary.dump() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression under average smoothness on finite metric samples"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides seeds in input files)");
  app.add_option("--threads", g.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path (default: standard output)");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Draw a labeled dataset from a scenario");
  gen_cmd->add_option("--scenario", gen.scenario, "Scenario JSON")->required();
  gen_cmd->add_option("--n", gen.n, "Sample size")->check(CLI::PositiveNumber);

  SlopeArgs slope;
  auto* slope_cmd = app.add_subcommand("slope", "Per-point slopes and empirical smoothness of the labels");
  slope_cmd->add_option("--data", slope.data, "Dataset JSON")->required();
  slope_cmd->add_option("--beta", slope.beta, "Exponent in (0, 1]")->check(CLI::Range(0.0, 1.0));

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Relabel and extend a dataset");
  train_cmd->add_option("--data", train.data, "Dataset JSON")->required();
  train_cmd->add_option("--config", train.config, "Learner config JSON");
  train_cmd->add_option("--beta", train.learner.beta, "Exponent in (0, 1]");
  train_cmd->add_option("--L", train.learner.L, "Average-smoothness budget");
  train_cmd->add_option("--epsilon", train.learner.epsilon, "Target excess risk");
  train_cmd->add_option("--delta", train.learner.delta, "Failure probability");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Evaluate a trained model");
  predict_cmd->add_option("--model", predict.model, "Model JSON")->required();
  predict_cmd->add_option("--queries", predict.queries, "Query JSON with 'points' or 'distances'")->required();

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "Evaluate the generalization bounds on a grid-covered cube");
  bound_cmd->add_option("--epsilon", bound.learner.epsilon, "Target excess risk");
  bound_cmd->add_option("--alpha", bound.alpha, "Bracket width (default: epsilon)");
  bound_cmd->add_option("--L", bound.learner.L, "Average-smoothness budget");
  bound_cmd->add_option("--beta", bound.learner.beta, "Exponent in (0, 1]");
  bound_cmd->add_option("--delta", bound.learner.delta, "Failure probability");
  bound_cmd->add_option("--n", bound.n, "Sample size for the deviation bound")->check(CLI::PositiveNumber);
  bound_cmd->add_option("--dim", bound.dim, "Cube dimension")->check(CLI::PositiveNumber);
  bound_cmd->add_option("--diameter", bound.diameter, "Cube side length")->check(CLI::PositiveNumber);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Excess-risk sweep over sample sizes; CSV rows");
  sweep_cmd->add_option("--spec", sweep.spec, "Sweep spec JSON (scenario, config, n_grid, trials)")->required();
  sweep_cmd->add_option("--n-grid", sweep.n_grid, "Override the sample sizes");
  sweep_cmd->add_option("--trials", sweep.trials, "Override the trial count");
  sweep_cmd->add_option("--mc-draws", sweep.mc_draws, "Override the held-out draws per trial");
  sweep_cmd->add_option("--summary", sweep.summary, "Write the fitted-rate summary JSON here");
  sweep_cmd->add_flag("--runtime", sweep.runtime, "Add a wall-clock column (not reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) run_gen(g, gen);
    else if (*slope_cmd) run_slope(g, slope);
    else if (*train_cmd) run_train(g, train, *train_cmd);
    else if (*predict_cmd) run_predict(g, predict);
    else if (*bound_cmd) run_bound(g, bound);
    else if (*sweep_cmd) run_sweep_cmd(g, sweep);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
