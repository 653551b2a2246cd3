#include "potkit/metrics.hpp"

#include <cmath>

namespace potkit {

double lambda_to_mass(double lambda, const MassVector& r, const MassVector& c) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParameterError("lambda_to_mass: lambda must lie in [0, 1]");
  }
  return lambda * std::min(r.total(), c.total());
}

namespace detail {

Marginals plan_marginals(const SquareMatrix& x) {
  const std::size_t n = x.n;
  Marginals m;
  m.row.assign(n, 0.0);
  m.col.assign(n, 0.0);
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double rs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      rs += xi[j];
      m.col[j] += xi[j];
    }
    m.row[i] = rs;
    total.add(rs);
  }
  m.total = total.value();
  return m;
}

}  // namespace detail

static void require_same_shape(const PotProblem& problem, const TransportPlan& plan) {
  if (plan.size() != problem.size()) {
    throw ShapeError("plan dimension does not match problem dimension");
  }
}

double objective_qpot(const PotProblem& problem, const TransportPlan& plan) {
  require_same_shape(problem, plan);
  const SquareMatrix& x = plan.entries;
  const SquareMatrix& c = problem.cost().entries();
  CompensatedSum acc;
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    const double v = x.data[k];
    acc.add(c.data[k] * v + 0.5 * problem.epsilon() * v * v);
  }
  return acc.value();
}

double objective_epot(const PotProblem& problem, const TransportPlan& plan) {
  require_same_shape(problem, plan);
  const SquareMatrix& x = plan.entries;
  const SquareMatrix& c = problem.cost().entries();
  CompensatedSum acc;
  const double half_eps = 0.5 * problem.epsilon();
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    const double v = x.data[k];
    if (v < 0.0) throw DomainError("objective_epot: negative plan entry");
    if (v == 0.0) continue;  // x log x - x -> 0 as x -> 0
    acc.add(c.data[k] * v + half_eps * (v * std::log(v) - v));
  }
  return acc.value();
}

FeasibilityReport check_feasibility(const PotProblem& problem,
                                    const TransportPlan& plan, double tol) {
  require_same_shape(problem, plan);
  if (!(tol >= 0.0)) throw ParameterError("check_feasibility: tol must be >= 0");
  const auto m = detail::plan_marginals(plan.entries);
  FeasibilityReport rep;
  for (std::size_t i = 0; i < m.row.size(); ++i) {
    rep.row_violation = std::max(rep.row_violation, m.row[i] - problem.r()[i]);
    rep.col_violation = std::max(rep.col_violation, m.col[i] - problem.c()[i]);
  }
  rep.row_violation = std::max(rep.row_violation, 0.0);
  rep.col_violation = std::max(rep.col_violation, 0.0);
  rep.mass_error = std::abs(m.total - problem.s());
  double mn = plan.entries.data.empty() ? 0.0 : plan.entries.data[0];
  for (double v : plan.entries.data) mn = std::min(mn, v);
  rep.min_entry = mn;
  return rep;
}

double sparsity(const TransportPlan& plan, double threshold) {
  if (!(threshold >= 0.0)) throw ParameterError("sparsity: threshold must be >= 0");
  if (plan.entries.data.empty()) return 0.0;
  std::size_t below = 0;
  for (double v : plan.entries.data) {
    if (std::abs(v) < threshold) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(plan.entries.data.size());
}

CostMatrix cost_matrix_from_positions(const std::vector<std::vector<double>>& a,
                                      const std::vector<std::vector<double>>& b,
                                      bool normalize) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("cost_matrix_from_positions: point lists must have equal nonzero length");
  }
  const std::size_t n = a.size();
  const std::size_t dim = a[0].size();
  for (const auto& p : a) {
    if (p.size() != dim) throw ShapeError("cost_matrix_from_positions: ragged point dimension");
  }
  for (const auto& p : b) {
    if (p.size() != dim) throw ShapeError("cost_matrix_from_positions: ragged point dimension");
  }
  SquareMatrix m(n);
  double mx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = a[i][k] - b[j][k];
        d2 += d * d;
      }
      m(i, j) = d2;
      mx = std::max(mx, d2);
    }
  }
  bool flagged = false;
  if (normalize && mx > 0.0) {
    for (double& v : m.data) v /= mx;
    flagged = true;
  }
  // normalize on an all-zero matrix: returned unchanged, flag not set
  return CostMatrix(std::move(m), flagged);
}

}  // namespace potkit
