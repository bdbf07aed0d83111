#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace avgsmooth {

/// minimize c^T x  subject to  A x >= b,  x >= 0.
class LinearProgram {
 public:
  using Term = std::pair<std::size_t, double>;

  explicit LinearProgram(std::size_t num_variables) : cost_(num_variables, 0.0) {}

  void set_cost(std::size_t var, double c) { cost_.at(var) = c; }

  /// Adds sum(coef * x[var]) >= rhs and returns the row index.
  std::size_t add_row(std::span<const Term> terms, double rhs) {
    const std::size_t row = rhs_.size();
    for (const auto& [var, coef] : terms) {
      if (var >= cost_.size()) throw std::out_of_range("row references an unknown variable");
      if (coef != 0.0) entries_.emplace_back(static_cast<int>(row), static_cast<int>(var), coef);
    }
    rhs_.push_back(rhs);
    return row;
  }

  std::size_t add_row(std::initializer_list<Term> terms, double rhs) {
    return add_row(std::span<const Term>(terms.begin(), terms.size()), rhs);
  }

  [[nodiscard]] std::size_t num_variables() const noexcept { return cost_.size(); }
  [[nodiscard]] std::size_t num_rows() const noexcept { return rhs_.size(); }
  [[nodiscard]] std::span<const double> cost() const noexcept { return cost_; }
  [[nodiscard]] std::span<const double> rhs() const noexcept { return rhs_; }
  [[nodiscard]] const std::vector<Eigen::Triplet<double>>& entries() const noexcept { return entries_; }

  /// Largest violation of A x >= b and x >= 0 (0 when feasible).
  [[nodiscard]] double max_violation(std::span<const double> x) const {
    std::vector<double> ax(num_rows(), 0.0);
    for (const auto& t : entries_) ax[t.row()] += t.value() * x[t.col()];
    double worst = 0.0;
    for (std::size_t r = 0; r < num_rows(); ++r) worst = std::max(worst, rhs_[r] - ax[r]);
    for (double v : x) worst = std::max(worst, -v);
    return worst;
  }

 private:
  std::vector<double> cost_;
  std::vector<double> rhs_;
  std::vector<Eigen::Triplet<double>> entries_;
};

enum class LpSolveStatus { optimal, infeasible, iteration_limit, numerical_failure };

struct LpSolution {
  LpSolveStatus status = LpSolveStatus::numerical_failure;
  std::vector<double> x;
  std::vector<double> row_duals;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // relative, infinity norm
  double dual_residual = 0.0;
  int iterations = 0;
};

struct InteriorPointOptions {
  double tolerance = 1e-9;              // relative gap
  double feasibility_tolerance = 1e-8;  // relative residuals
  double absolute_gap = 0.0;            // also stop once c^T x - b^T y <= this (and residuals are small)
  double fallback_tolerance = 1e-6;     // residuals of iterates kept in case the run later stalls
  int max_iterations = 200;
  double regularization = 1e-12;
};

/// Mehrotra predictor-corrector on the normal equations in variable space,
/// factored with a sparse LDL^T. Callers should avoid long dense rows, which
/// fill the normal matrix; split them into chains of sparse rows instead.
inline LpSolution solve_interior_point(const LinearProgram& lp, const InteriorPointOptions& opt = {}) {
  using Vec = Eigen::VectorXd;
  using SpMat = Eigen::SparseMatrix<double>;

  const auto nvar = static_cast<Eigen::Index>(lp.num_variables());
  const auto nrow = static_cast<Eigen::Index>(lp.num_rows());
  LpSolution out;
  if (nvar == 0) throw std::invalid_argument("linear program without variables");

  const Vec c = Eigen::Map<const Vec>(lp.cost().data(), nvar);
  const Vec b = Eigen::Map<const Vec>(lp.rhs().data(), nrow);
  SpMat A(nrow, nvar);
  A.setFromTriplets(lp.entries().begin(), lp.entries().end());
  const SpMat At = A.transpose();

  Vec x = Vec::Ones(nvar), z = Vec::Ones(nvar), y = Vec::Ones(nrow), w = Vec::Ones(nrow);
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> chol;
  Eigen::Index pattern_nnz = -1;
  SpMat identity(nvar, nvar);
  identity.setIdentity();

  // Mehrotra starting point: least-norm solutions of A x - w = b and
  // A^T y + z = c, shifted into the positive orthant.
  if (nrow > 0) {
    const SpMat M = SpMat(At * A) + identity;
    chol.analyzePattern(M);
    chol.factorize(M);
    pattern_nnz = -1;
    if (chol.info() == Eigen::Success) {
      const Vec x0 = chol.solve(At * b);
      const Vec y0 = A * Vec(chol.solve(c));
      const Vec w0 = A * x0 - b;
      const Vec z0 = c - At * y0;
      const double px = std::max(0.0, -1.5 * std::min(x0.minCoeff(), w0.minCoeff()));
      const double pd = std::max(0.0, -1.5 * std::min(y0.minCoeff(), z0.minCoeff()));
      Vec xs = (x0.array() + px).matrix(), ws = (w0.array() + px).matrix();
      Vec ys = (y0.array() + pd).matrix(), zs = (z0.array() + pd).matrix();
      const double cross = xs.dot(zs) + ys.dot(ws);
      const double sx = xs.sum() + ws.sum(), sd = ys.sum() + zs.sum();
      const double qx = sd > 0.0 ? 0.5 * cross / sd : 0.0;
      const double qd = sx > 0.0 ? 0.5 * cross / sx : 0.0;
      xs.array() += qx;
      ws.array() += qx;
      ys.array() += qd;
      zs.array() += qd;
      const double floor = 1e-2;
      if (xs.allFinite() && ws.allFinite() && ys.allFinite() && zs.allFinite()) {
        x = xs.cwiseMax(floor);
        w = ws.cwiseMax(floor);
        y = ys.cwiseMax(floor);
        z = zs.cwiseMax(floor);
      }
    }
  }

  const double bnorm = 1.0 + (nrow > 0 ? b.lpNorm<Eigen::Infinity>() : 0.0);
  const double cnorm = 1.0 + c.lpNorm<Eigen::Infinity>();
  const double total = static_cast<double>(nvar + nrow);

  struct Snapshot {
    Vec x, y;
    double pres, dres, pobj, dobj, gap;
    bool gap_ok;
  };
  std::optional<Snapshot> best;

  auto max_step = [](const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if (dv[k] < 0.0) a = std::min(a, -v[k] / dv[k]);
    return a;
  };

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    const Vec rp = b + w - A * x;
    const Vec rd = c - At * y - z;
    const double mu = (x.dot(z) + y.dot(w)) / total;
    const double pobj = c.dot(x);
    const double dobj = b.dot(y);
    out.iterations = iter;
    out.primal_residual = (nrow > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0) / bnorm;
    // Relative to the size of the terms being balanced, so large duals do not stall convergence.
    const Vec aty = At * y;
    out.dual_residual =
        rd.lpNorm<Eigen::Infinity>() / (cnorm + (nrow > 0 ? aty.lpNorm<Eigen::Infinity>() : 0.0));
    out.primal_objective = pobj;
    out.dual_objective = dobj;

    const double gap = pobj - dobj;
    const bool gap_ok = std::abs(gap) <= opt.tolerance * (1.0 + std::abs(pobj)) ||
                        (opt.absolute_gap > 0.0 && gap <= opt.absolute_gap);
    if (out.primal_residual <= opt.feasibility_tolerance && out.dual_residual <= opt.feasibility_tolerance &&
        gap_ok) {
      out.status = LpSolveStatus::optimal;
      break;
    }
    if (out.primal_residual <= opt.fallback_tolerance && out.dual_residual <= opt.fallback_tolerance &&
        std::isfinite(gap) && (!best || std::abs(gap) < std::abs(best->gap))) {
      best = Snapshot{x, y, out.primal_residual, out.dual_residual, pobj, dobj, gap, gap_ok};
    }
    // Farkas ray: y >= 0 with A^T y <= 0 and b^T y > 0 certifies infeasibility.
    if (out.primal_residual > opt.feasibility_tolerance && dobj > 0.0) {
      const double lift = aty.maxCoeff();
      if (lift <= 1e-9 * dobj && y.norm() > 1e6 * (1.0 + x.norm())) {
        out.status = LpSolveStatus::infeasible;
        break;
      }
    }
    if (iter == opt.max_iterations) {
      out.status = LpSolveStatus::iteration_limit;
      break;
    }

    const Vec g = y.cwiseQuotient(w);
    const SpMat AtGA = At * g.asDiagonal() * A;
    const Vec h = z.cwiseQuotient(x);
    SpMat diag = identity;
    SpMat M;
    // Near the optimum z/x spans many orders of magnitude; stronger
    // regularization rescues a factorization that loses positivity.
    double reg = opt.regularization;
    for (int attempt = 0; attempt < 4; ++attempt, reg *= 1e3) {
      diag.diagonal() = h.array() + reg * (1.0 + h.array());
      M = AtGA + diag;
      if (M.nonZeros() != pattern_nnz) {
        chol.analyzePattern(M);
        pattern_nnz = M.nonZeros();
      }
      chol.factorize(M);
      if (chol.info() == Eigen::Success) break;
    }
    if (chol.info() != Eigen::Success) {
      out.status = LpSolveStatus::numerical_failure;
      break;
    }
    auto normal_solve = [&](const Vec& rhs) -> Vec {
      Vec sol = chol.solve(rhs);
      sol += chol.solve(Vec(rhs - M * sol));  // one step of iterative refinement
      return sol;
    };

    struct Step {
      Vec dx, dw, dy, dz;
    };
    auto newton = [&](const Vec& rxz, const Vec& ryw) {
      Step st;
      const Vec rhs = At * (ryw + y.cwiseProduct(rp)).cwiseQuotient(w) + rxz.cwiseQuotient(x) - rd;
      st.dx = normal_solve(rhs);
      st.dw = A * st.dx - rp;
      st.dy = (ryw - y.cwiseProduct(st.dw)).cwiseQuotient(w);
      // From the dual equation rather than complementarity, so solve errors
      // land in the centering terms the next iterations correct anyway.
      st.dz = rd - At * st.dy;
      return st;
    };

    // Predictor.
    const Vec xz = x.cwiseProduct(z);
    const Vec yw = y.cwiseProduct(w);
    const Step aff = newton(-xz, -yw);
    const double ap_aff = std::min(max_step(x, aff.dx), max_step(w, aff.dw));
    const double ad_aff = std::min(max_step(y, aff.dy), max_step(z, aff.dz));
    const double mu_aff = ((x + ap_aff * aff.dx).dot(z + ad_aff * aff.dz) +
                           (y + ad_aff * aff.dy).dot(w + ap_aff * aff.dw)) / total;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    const Vec rxz = (Vec::Constant(nvar, sigma * mu) - xz - aff.dx.cwiseProduct(aff.dz)).eval();
    const Vec ryw = (Vec::Constant(nrow, sigma * mu) - yw - aff.dy.cwiseProduct(aff.dw)).eval();
    const Step st = newton(rxz, ryw);
    if (!st.dx.allFinite() || !st.dy.allFinite()) {
      out.status = LpSolveStatus::numerical_failure;
      break;
    }
    const double eta = std::max(0.9, 1.0 - 10.0 * mu);
    const double ap = std::min(1.0, eta * std::min(max_step(x, st.dx), max_step(w, st.dw)));
    const double ad = std::min(1.0, eta * std::min(max_step(y, st.dy), max_step(z, st.dz)));
    x += ap * st.dx;
    w += ap * st.dw;
    y += ad * st.dy;
    z += ad * st.dz;
  }

  // A stalled run falls back on its best nearly feasible iterate.
  if (out.status != LpSolveStatus::optimal && out.status != LpSolveStatus::infeasible && best) {
    x = best->x;
    y = best->y;
    out.primal_residual = best->pres;
    out.dual_residual = best->dres;
    out.primal_objective = best->pobj;
    out.dual_objective = best->dobj;
    if (best->gap_ok) out.status = LpSolveStatus::optimal;
  }
  out.x.assign(x.data(), x.data() + nvar);
  out.row_duals.assign(y.data(), y.data() + nrow);
  return out;
}

}  // namespace avgsmooth
