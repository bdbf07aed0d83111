// Acceptance checks. Prints one PASS/FAIL line per criterion. The exit code is 0
// once every selected criterion has run; with --strict it is the number of
// failures. Pass criterion numbers as arguments to run a subset, and
// --report FILE to copy the lines into a file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "avgsmooth/bounds.hpp"
#include "avgsmooth/extension.hpp"
#include "avgsmooth/learner.hpp"
#include "avgsmooth/rng.hpp"
#include "avgsmooth/smoothness.hpp"
#include "avgsmooth/sweep.hpp"
#include "avgsmooth/synthetic.hpp"

namespace {

using namespace avgsmooth;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::uint64_t interval_cover(double t) { return interval_cover_bound(t, 1, 1.0); }

// 1. Every net point is reproduced exactly by the extension.
Verdict extension_interpolation() {
  const auto t0 = Clock::now();
  CounterRng rng(101);
  const MetricKind kinds[] = {MetricKind::euclidean, MetricKind::linf, MetricKind::matrix};
  const double betas[] = {1.0, 0.5, 0.75};
  std::size_t instances = 0, checked = 0;
  double worst = 0.0;
  for (int k = 0; k < 150; ++k) {
    const std::size_t n = 1 + rng.below(50);
    const std::size_t dim = 1 + rng.below(3);
    const MetricKind kind = kinds[k % 3];
    const double beta = betas[rng.below(3)];
    std::vector<Point> pts(n, Point(dim));
    for (auto& p : pts)
      for (auto& c : p) c = rng.uniform();
    std::vector<double> ys(n);
    for (auto& y : ys) y = rng.uniform();
    FiniteMetric space = FiniteMetric::from_points(kind == MetricKind::matrix ? MetricKind::euclidean : kind, pts);
    if (kind == MetricKind::matrix) {
      std::vector<std::vector<double>> d(n, std::vector<double>(n));
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) d[a][b] = space.distance(a, b);
      space = FiniteMetric::from_matrix(d);
    }
    const double gamma = rng.uniform(0.001, 0.3);
    const auto model = fit_extension(space, ys, beta, gamma);
    for (std::size_t a = 0; a < model.size(); ++a) {
      const std::size_t idx = model.net_indices()[a];
      const double got = kind == MetricKind::matrix ? predict_at(model, space, idx) : model.predict(model.point(a));
      worst = std::max(worst, std::abs(got - ys[idx]));
      ++checked;
    }
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && instances >= 100 && secs < 10.0,
          fmt("%zu instances, %zu net points, max |f(a) - fhat(a)| = %.3g, %.2f s", instances, checked, worst, secs)};
}

// Lower estimate of the average slope of `f` under the scenario's law: at each
// Monte Carlo point the slope is maximized over a grid, the net, and nearby offsets.
double average_slope_of(const Scenario& s, const ExtensionModel& model, std::size_t draws, std::uint64_t seed) {
  const std::size_t grid = 513;
  std::vector<double> gx(grid), gf(grid);
  for (std::size_t g = 0; g < grid; ++g) {
    gx[g] = static_cast<double>(g) / static_cast<double>(grid - 1);
    gf[g] = model.predict(gx[g]);
  }
  std::vector<double> nx(model.size());
  for (std::size_t a = 0; a < model.size(); ++a) nx[a] = model.point(a)[0];
  const auto nf = model.labels();
  const double offsets[] = {1e-6, 1e-4, 1e-3, 1e-2};
  CounterRng rng(seed);
  double total = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double x = draw_first_coordinate(s, rng);
    const double fx = model.predict(x);
    double best = 0.0;
    auto consider = [&](double y, double fy) {
      const double d = std::abs(y - x);
      if (d > 0.0) best = std::max(best, std::abs(fx - fy) / d);
    };
    for (std::size_t g = 0; g < grid; ++g) consider(gx[g], gf[g]);
    for (std::size_t a = 0; a < nx.size(); ++a) consider(nx[a], nf[a]);
    for (double h : offsets) {
      if (x - h >= 0.0) consider(x - h, model.predict(x - h));
      if (x + h <= 1.0) consider(x + h, model.predict(x + h));
    }
    total += best;
  }
  return total / static_cast<double>(draws);
}

// 2. Average slope of the extension is at most 5 times the empirical slope of its input.
Verdict extension_smoothness() {
  const auto t0 = Clock::now();
  const double gamma = 0.05, delta = 0.05;
  const double cover = static_cast<double>(interval_cover(gamma));
  const auto n = static_cast<std::size_t>(
      std::ceil((cover + std::log(1.0 / delta)) * std::log(1.0 / gamma) / gamma));
  const std::vector<Scenario> scenarios{
      interval_scenario({0.0, 0.5, 1.0}, {0.2, 0.8, 0.2}, {}, 1),
      interval_scenario({0.0, 0.25, 0.5, 0.75, 1.0}, {0.2, 0.8, 0.2, 0.8, 0.2}, {}, 2)};
  const std::size_t trials = 200;
  bool pass = true;
  std::string detail = fmt("n = %zu, gamma = %.2f:", n, gamma);
  for (std::size_t sc = 0; sc < scenarios.size(); ++sc) {
    const auto& s = scenarios[sc];
    std::size_t held = 0;
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto smp = sample(s, n, derive_seed(202, sc, t));
      std::vector<double> fhat(n);
      for (std::size_t i = 0; i < n; ++i) fhat[i] = target_value(s, smp.space().point(i));
      const double emp = empirical_smoothness(smp.space(), fhat, 1.0, IsolatedPoint::zero).empirical_avg;
      const auto model = fit_extension(smp.space(), fhat, 1.0, gamma);
      const double avg = average_slope_of(s, model, 100000, derive_seed(203, sc, t));
      held += avg <= 5.0 * emp;
      if (emp > 0.0) worst_ratio = std::max(worst_ratio, avg / emp);
    }
    pass &= static_cast<double>(held) >= 0.95 * static_cast<double>(trials);
    detail += fmt(" scenario %zu holds in %zu/%zu (max ratio %.2f);", sc, held, trials, worst_ratio);
  }
  const double secs = seconds_since(t0);
  pass &= secs < 300.0;
  return {pass, detail + fmt(" %.1f s", secs)};
}

// 3. Relabeling LP against a brute-force search over the 0.05 label grid.
Verdict lp_correctness() {
  const auto t0 = Clock::now();
  CounterRng rng(303);
  const double accuracy = 0.01;
  const std::size_t levels = 21;
  std::size_t instances = 0, good = 0;
  double worst = 0.0;
  for (int k = 0; k < 60; ++k) {
    const std::size_t n = 2 + rng.below(3);
    std::vector<double> xs(n), ys(n);
    for (auto& x : xs) x = rng.uniform();
    for (auto& y : ys) y = static_cast<double>(rng.below(levels)) / static_cast<double>(levels - 1);
    const double beta = rng.below(2) == 0 ? 1.0 : 0.5;
    const double budget = k % 5 == 0 ? 0.0 : rng.uniform(0.0, 3.0);
    const LabeledSample smp(FiniteMetric::on_line(xs), ys);
    const auto res = solve_lp(build_lp(smp, beta, budget), accuracy);

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> code(n, 0);
    std::vector<double> f(n);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<double>(code[i]) / static_cast<double>(levels - 1);
      if (empirical_smoothness(smp.space(), f, beta).empirical_avg <= budget) {
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err += std::abs(f[i] - ys[i]);
        best = std::min(best, err / static_cast<double>(n));
      }
      std::size_t p = 0;
      while (p < n && ++code[p] == levels) code[p++] = 0;
      if (p == n) break;
    }
    const double gap = std::abs(res.objective - best);
    worst = std::max(worst, gap);
    const bool ok = res.lp_status == LpStatus::optimal_within_alpha && gap <= 0.06 &&
                    res.objective <= best + accuracy + 1e-9 &&
                    res.achieved_smoothness <= budget * (1.0 + 1e-9) + 1e-12;
    good += ok;
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {good == instances && instances >= 50 && secs < 120.0,
          fmt("%zu/%zu instances agree, max |lp - grid| = %.4f, %.2f s", good, instances, worst, secs)};
}

// 4. Empirical slope of the target rarely exceeds 5 ln^2(2n/delta) times its average slope.
Verdict smoothness_concentration() {
  const std::size_t n = 500, resamples = 500;
  const std::vector<Scenario> scenarios{
      interval_scenario({0.0, 0.5, 1.0}, {0.2, 0.8, 0.2}, {}, 1),
      spike_scenario(0.3, 0.5, 0.005, 0.5, 0.25, 0.001, {}, 4)};
  const double deltas[] = {0.05, 0.1};
  bool pass = true;
  std::string detail = fmt("n = %zu, %zu resamples:", n, resamples);
  for (std::size_t sc = 0; sc < scenarios.size(); ++sc) {
    const auto& s = scenarios[sc];
    const double avg = true_average_smoothness(s);
    std::vector<double> emp(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
      const auto smp = sample(s, n, derive_seed(404, sc, r));
      std::vector<double> f(n);
      for (std::size_t i = 0; i < n; ++i) f[i] = target_value(s, smp.space().point(i));
      emp[r] = empirical_smoothness(smp.space(), f, 1.0, IsolatedPoint::zero).empirical_avg;
    }
    for (double delta : deltas) {
      const double lg = std::log(2.0 * static_cast<double>(n) / delta);
      const double cap = 5.0 * lg * lg * avg;
      std::size_t bad = 0;
      for (double e : emp) bad += e > cap;
      const double freq = static_cast<double>(bad) / static_cast<double>(resamples);
      const double allowed = delta + 3.0 * std::sqrt(delta / static_cast<double>(resamples));
      pass &= freq <= allowed;
      detail += fmt(" scenario %zu delta %.2f violations %.3f (allowed %.3f);", sc, delta, freq, allowed);
    }
  }
  return {pass, detail};
}

// 5. Loss brackets contain every loss of the bracket and keep its width, on dyadic grids.
Verdict loss_bracket_validity() {
  const auto t0 = Clock::now();
  CounterRng rng(505);
  const std::size_t xs = 20, nys = 20;
  const double unit = 1.0 / 1024.0;
  std::vector<double> ys(nys);
  for (std::size_t k = 0; k < nys; ++k) ys[k] = std::round(static_cast<double>(k) * 1024.0 / 19.0) * unit;
  std::size_t violations = 0, checks = 0;
  for (int b = 0; b < 100; ++b) {
    std::vector<double> lo(xs), hi(xs);
    for (std::size_t i = 0; i < xs; ++i) {
      const auto p = static_cast<double>(rng.below(1025)), q = static_cast<double>(rng.below(1025));
      lo[i] = std::min(p, q) * unit;
      hi[i] = std::max(p, q) * unit;
    }
    const Bracket fb(lo, hi);
    const auto lb = loss_bracket(fb, ys);
    for (std::size_t i = 0; i < xs; ++i) {
      std::vector<double> members{lo[i], hi[i]};
      const auto span = static_cast<std::uint64_t>((hi[i] - lo[i]) / unit);
      for (int m = 0; m < 8; ++m) members.push_back(lo[i] + static_cast<double>(rng.below(span + 1)) * unit);
      for (std::size_t k = 0; k < nys; ++k) {
        const double l = lb.lower_at(i, k), u = lb.upper_at(i, k);
        violations += (u - l) != (hi[i] - lo[i]);
        double least = std::numeric_limits<double>::infinity(), most = 0.0;
        for (double f : members) {
          const double loss = std::abs(f - ys[k]);
          violations += !(l <= loss && loss <= u);
          least = std::min(least, loss);
          most = std::max(most, loss);
          ++checks;
        }
        // The lower envelope is attained inside the bracket, and so is the upper
        // one when y lies outside [f_L, f_U].
        least = std::min(least, std::abs(std::clamp(ys[k], lo[i], hi[i]) - ys[k]));
        violations += least != l;
        if (ys[k] < lo[i] || ys[k] > hi[i]) violations += most != u;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0,
          fmt("%zu containment checks over 100 brackets on a 20x20 grid, %zu violations, %.2f s", checks,
              violations, secs)};
}

// 6. Uniform deviation over an 8-function class on 4 points shrinks like 1/sqrt(n).
Verdict uniform_convergence_scaling() {
  const std::vector<double> weight{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> p_one{0.2, 0.5, 0.7, 0.9};  // P(Y = 1 | x)
  const std::vector<std::vector<double>> cls{
      {0.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}, {0.5, 0.5, 0.5, 0.5}, {0.0, 0.25, 0.5, 0.75},
      {1.0, 0.0, 1.0, 0.0}, {0.2, 0.8, 0.2, 0.8}, {0.9, 0.6, 0.3, 0.0}, {0.0, 0.0, 1.0, 1.0}};
  std::vector<double> risk(cls.size(), 0.0);
  for (std::size_t f = 0; f < cls.size(); ++f)
    for (std::size_t x = 0; x < 4; ++x)
      risk[f] += weight[x] * (p_one[x] * (1.0 - cls[f][x]) + (1.0 - p_one[x]) * cls[f][x]);

  auto sup_deviation = [&](std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<double> loss(cls.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform();
      std::size_t x = 0;
      for (double c = weight[0]; u >= c && x < 3; c += weight[++x]) {
      }
      const double y = rng.uniform() < p_one[x] ? 1.0 : 0.0;
      for (std::size_t f = 0; f < cls.size(); ++f) loss[f] += std::abs(cls[f][x] - y);
    }
    double sup = 0.0;
    for (std::size_t f = 0; f < cls.size(); ++f)
      sup = std::max(sup, std::abs(risk[f] - loss[f] / static_cast<double>(n)));
    return sup;
  };

  const std::size_t trials = 2000, n = 200;
  double small = 0.0, large = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    small += sup_deviation(n, derive_seed(606, 0, t));
    large += sup_deviation(4 * n, derive_seed(606, 1, t));
  }
  small /= static_cast<double>(trials);
  large /= static_cast<double>(trials);
  const double ratio = small / large;

  // The finite class is its own exact bracketing at alpha = 0.
  const double delta = 0.1;
  const double bound = deviation_bound(0.0, n, delta, std::log(static_cast<double>(cls.size())));
  std::size_t within = 0;
  for (std::size_t t = 0; t < 1000; ++t) within += sup_deviation(n, derive_seed(607, 0, t)) <= bound;
  const bool bound_ok = static_cast<double>(within) >= (1.0 - delta) * 1000.0;
  return {ratio >= 1.7 && ratio <= 2.3 && bound_ok,
          fmt("E sup at n=%zu: %.5f, at n=%zu: %.5f, ratio %.3f; deviation bound %.4f held in %zu/1000", n, small,
              4 * n, large, ratio, bound, within)};
}

// 7. Log-log slope of excess risk in n on a one-dimensional Lipschitz scenario.
Verdict agnostic_rate() {
  const auto t0 = Clock::now();
  SweepSpec spec;
  spec.scenario = interval_scenario({0.0, 0.5, 1.0}, {0.35, 0.65, 0.35}, {NoiseKind::uniform, 0.1}, 7);
  spec.n_grid = {250, 500, 1000, 2000, 4000};
  spec.trials = 10;
  spec.config = {1.0, 0.001, 0.0005, 0.05};
  spec.mc_draws = 100000;
  spec.seed = 11;
  const auto rep = run_sweep(spec);
  const double secs = seconds_since(t0);
  std::string means;
  for (std::size_t k = 0; k < rep.n_values.size(); ++k) means += fmt(" %zu:%.5f", rep.n_values[k], rep.mean_excess[k]);
  const double target = -rate_exponent(1, 1.0);
  return {std::abs(rep.fitted_slope - target) <= 0.15 && secs < 1800.0,
          fmt("fitted slope %.3f (target %.3f +- 0.15); mean excess%s; %.0f s", rep.fitted_slope, target,
              means.c_str(), secs)};
}

// 8. The learner copes with a steep but rarely visited spike.
Verdict spike_gap() {
  const auto s = spike_scenario(0.3, 0.5, 0.005, 0.5, 0.25, 0.001, {NoiseKind::uniform, 0.1}, 5);
  const double holder = target_holder_seminorm(s), avg = true_average_smoothness(s);
  SweepSpec spec;
  spec.scenario = s;
  spec.n_grid = {2000};
  spec.trials = 20;
  spec.config = {1.0, 2.0, 0.1, 0.05};
  spec.mc_draws = 100000;
  spec.seed = 21;
  std::size_t ok = 0;
  double worst = 0.0;
  run_sweep(spec, [&](const SweepRow& r) {
    ok += r.excess <= 0.1;
    worst = std::max(worst, r.excess);
  });
  const bool pass = std::abs(holder - 100.0) <= 1e-9 && avg <= 2.0 && ok >= 18;
  return {pass, fmt("holder %.3f, average slope %.4f; excess <= 0.1 in %zu/20 trials (worst %.4f)", holder, avg, ok,
                    worst)};
}

// 9. Bound evaluators: hand values and monotonicity.
Verdict bound_evaluators() {
  std::vector<std::string> failures;
  auto close = [&](const char* what, double got, double want) {
    if (!(std::abs(got - want) <= 1e-9 * std::abs(want))) failures.push_back(fmt("%s = %.12g, want %.12g", what, got, want));
  };
  close("entropy(0.5, 1, 1)", bracketing_entropy_bound(0.5, 1.0, 1.0, interval_cover), 89.0 * std::log(32.0));
  close("deviation(0, 100, 1/e, 0)", deviation_bound(0.0, 100, std::exp(-1.0), 0.0), 0.2);
  // scale 0.1 / (640 ln 10) = 6.7859e-5, cover 7369, (7369 + ln 10) ln 10 / 0.01 = 1697305.14
  close("sample size(0.1, 1, 1, 0.1)",
        static_cast<double>(required_sample_size(LearnerConfig{1.0, 1.0, 0.1, 0.1}, interval_cover)), 1697306.0);

  std::size_t monotone_checks = 0;
  auto expect = [&](bool ok, const std::string& what) {
    ++monotone_checks;
    if (!ok) failures.push_back(what);
  };
  for (double L : {0.5, 1.0, 3.0})
    for (double beta : {0.5, 1.0}) {
      double prev_h = std::numeric_limits<double>::infinity();
      double prev_n = std::numeric_limits<double>::infinity();
      for (double eps = 0.01; eps < std::min(L, 1.0); eps += 0.01) {
        const double h = bracketing_entropy_bound(eps, L, beta, interval_cover);
        expect(h <= prev_h, fmt("entropy rises in eps at %.2f", eps));
        expect(h <= bracketing_entropy_bound(eps, 2.0 * L, beta, interval_cover), "entropy falls in L");
        if (beta == 1.0) expect(h <= bracketing_entropy_bound(eps, L, 0.5, interval_cover), "entropy rises in beta");
        prev_h = h;
        const auto ns = static_cast<double>(required_sample_size(LearnerConfig{beta, L, eps, 0.1}, interval_cover));
        expect(ns <= prev_n, fmt("sample size rises in eps at %.2f", eps));
        expect(ns <= static_cast<double>(required_sample_size(LearnerConfig{beta, L, eps, 0.01}, interval_cover)),
               "sample size falls as delta shrinks");
        expect(ns <= static_cast<double>(required_sample_size(LearnerConfig{beta, 2.0 * L, eps, 0.1}, interval_cover)),
               "sample size falls in L");
        prev_n = ns;
      }
    }
  for (double alpha : {0.0, 0.05})
    for (double logb : {0.0, 3.0, 50.0}) {
      double prev = std::numeric_limits<double>::infinity();
      for (std::uint64_t n = 1; n <= 100000; n *= 3) {
        const double v = deviation_bound(alpha, n, 0.1, logb);
        expect(v < prev, "deviation rises in n");
        expect(v < deviation_bound(alpha, n, 0.01, logb), "deviation falls in 1/delta");
        expect(v < deviation_bound(alpha, n, 0.1, logb + 1.0), "deviation falls in log bracketing");
        prev = v;
      }
    }
  std::string detail = fmt("3 hand values, %zu monotonicity checks", monotone_checks);
  if (!failures.empty()) detail += "; first failure: " + failures.front() + fmt(" (%zu total)", failures.size());
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"extension interpolation", extension_interpolation},
      {"extension smoothness", extension_smoothness},
      {"LP correctness", lp_correctness},
      {"smoothness concentration", smoothness_concentration},
      {"loss bracket validity", loss_bracket_validity},
      {"uniform convergence scaling", uniform_convergence_scaling},
      {"agnostic rate", agnostic_rate},
      {"average vs worst-case gap", spike_gap},
      {"bound evaluators", bound_evaluators},
  };
  std::set<std::size_t> selected;
  bool strict = false;
  FILE* report = nullptr;
  for (int a = 1; a < argc; ++a) {
    if (std::string(argv[a]) == "--strict") {
      strict = true;
    } else if (std::string(argv[a]) == "--report" && a + 1 < argc) {
      report = std::fopen(argv[++a], "w");
      if (!report) {
        std::fprintf(stderr, "cannot open report file %s\n", argv[a]);
        return 1;
      }
    } else {
      selected.insert(std::stoul(argv[a]));
    }
  }
  int failures = 0, ran = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected.empty() && !selected.contains(k + 1)) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    ++ran;
    const std::string line = fmt("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                                 v.detail.c_str());
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) std::fputs(line.c_str(), report);
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  if (report) {
    std::fprintf(report, "%d of %d criteria passed\n", ran - failures, ran);
    std::fclose(report);
  }
  return strict ? failures : 0;
}
