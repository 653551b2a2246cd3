#include "potkit/epot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "potkit/metrics.hpp"

namespace potkit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_entropic(const PotProblem& problem) {
  if (problem.regularizer() != Regularizer::Entropic) {
    throw ParameterError("entropic solver called on a non-entropic problem");
  }
}

}  // namespace

DykstraScaler::DykstraScaler(const PotProblem& problem) : problem_(problem) {
  require_entropic(problem);
  const std::size_t n = problem.size();
  state_.log_kernel = SquareMatrix(n);
  const double f = -2.0 / problem.epsilon();
  for (std::size_t k = 0; k < n * n; ++k) {
    state_.log_kernel.data[k] = f * problem.cost().entries().data[k];
  }
  state_.log_row_scale.assign(n, 0.0);
  state_.log_col_scale.assign(n, 0.0);
  state_.correction_rows.assign(n, 0.0);
  state_.correction_cols.assign(n, 0.0);
  row_alive_.resize(n);
  col_alive_.resize(n);
  for (std::size_t i = 0; i < n; ++i) row_alive_[i] = problem.r()[i] > 0.0;
  for (std::size_t j = 0; j < n; ++j) col_alive_[j] = problem.c()[j] > 0.0;
}

void DykstraScaler::project_rows() {
  const std::size_t n = problem_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive_[i]) continue;
    // log of the row sum of kernel * col scales, shifted by the row's scale,
    // this set's correction, and the mass scale.
    double mx = kNegInf;
    const double* ki = state_.log_kernel.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_alive_[j]) continue;
      mx = std::max(mx, ki[j] + state_.log_col_scale[j]);
    }
    double log_row;
    if (!std::isfinite(mx)) {
      log_row = kNegInf;
    } else {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_alive_[j]) continue;
        acc += std::exp(ki[j] + state_.log_col_scale[j] - mx);
      }
      log_row = mx + std::log(acc);
    }
    const double val = log_row + state_.log_row_scale[i] +
                       state_.correction_rows[i] + state_.log_mass_scale;
    const double alpha = std::min(0.0, std::log(problem_.r()[i]) - val);
    state_.log_row_scale[i] += state_.correction_rows[i] + alpha;
    state_.correction_rows[i] = -alpha;
  }
}

void DykstraScaler::project_cols() {
  const std::size_t n = problem_.size();
  std::vector<double> mx(n, kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive_[i]) continue;
    const double* ki = state_.log_kernel.row(i);
    const double a = state_.log_row_scale[i];
    for (std::size_t j = 0; j < n; ++j) {
      mx[j] = std::max(mx[j], ki[j] + a);
    }
  }
  std::vector<double> acc(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive_[i]) continue;
    const double* ki = state_.log_kernel.row(i);
    const double a = state_.log_row_scale[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isfinite(mx[j])) acc[j] += std::exp(ki[j] + a - mx[j]);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!col_alive_[j]) continue;
    const double log_col = std::isfinite(mx[j]) ? mx[j] + std::log(acc[j]) : kNegInf;
    const double val = log_col + state_.log_col_scale[j] +
                       state_.correction_cols[j] + state_.log_mass_scale;
    const double beta = std::min(0.0, std::log(problem_.c()[j]) - val);
    state_.log_col_scale[j] += state_.correction_cols[j] + beta;
    state_.correction_cols[j] = -beta;
  }
}

void DykstraScaler::project_mass() {
  const std::size_t n = problem_.size();
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive_[i]) continue;
    const double* ki = state_.log_kernel.row(i);
    const double a = state_.log_row_scale[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_alive_[j]) continue;
      mx = std::max(mx, ki[j] + a + state_.log_col_scale[j]);
    }
  }
  if (!std::isfinite(mx)) return;  // no live cells; only possible when s = 0
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive_[i]) continue;
    const double* ki = state_.log_kernel.row(i);
    const double a = state_.log_row_scale[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_alive_[j]) continue;
      acc += std::exp(ki[j] + a + state_.log_col_scale[j] - mx);
    }
  }
  const double log_total = mx + std::log(acc);
  const double val = log_total + state_.log_mass_scale + state_.correction_mass;
  const double mu = std::log(problem_.s()) - val;
  state_.log_mass_scale += state_.correction_mass + mu;
  state_.correction_mass = -mu;
}

void DykstraScaler::sweep() {
  project_rows();
  project_cols();
  project_mass();
}

TransportPlan DykstraScaler::implied_plan() const {
  const std::size_t n = problem_.size();
  TransportPlan plan;
  plan.entries = SquareMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive_[i]) continue;
    const double* ki = state_.log_kernel.row(i);
    const double shift = state_.log_row_scale[i] + state_.log_mass_scale;
    double* xi = plan.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_alive_[j]) continue;
      xi[j] = std::exp(ki[j] + state_.log_col_scale[j] + shift);
    }
  }
  return plan;
}

FeasibilityReport DykstraScaler::violations() const {
  TransportPlan plan = implied_plan();
  return check_feasibility(problem_, plan, 0.0);
}

TransportPlan round_to_feasible(const TransportPlan& plan, const PotProblem& problem) {
  const std::size_t n = plan.size();
  if (n != problem.size()) {
    throw ShapeError("round_to_feasible: plan does not match problem");
  }
  const double s = problem.s();
  TransportPlan out = plan;
  const double break_tol = 1e-13 * std::max(1.0, s);
  for (int round = 0; round < 5; ++round) {
    auto m = detail::plan_marginals(out.entries);
    bool touched = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.row[i] > problem.r()[i]) {
        const double f = m.row[i] > 0.0 ? problem.r()[i] / m.row[i] : 0.0;
        double* xi = out.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) xi[j] *= f;
        touched = true;
      }
    }
    if (touched) m = detail::plan_marginals(out.entries);
    bool col_touched = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (m.col[j] > problem.c()[j]) {
        const double f = m.col[j] > 0.0 ? problem.c()[j] / m.col[j] : 0.0;
        for (std::size_t i = 0; i < n; ++i) out.entries(i, j) *= f;
        col_touched = true;
      }
    }
    if (col_touched) m = detail::plan_marginals(out.entries);

    const double total = m.total;
    if (total > s) {
      const double f = s / total;
      for (double& x : out.entries.data) x *= f;
    } else if (total < s) {
      const double deficit = s - total;
      double slack_r_sum = 0.0, slack_c_sum = 0.0;
      std::vector<double> slack_r(n), slack_c(n);
      for (std::size_t i = 0; i < n; ++i) {
        slack_r[i] = std::max(0.0, problem.r()[i] - m.row[i]);
        slack_r_sum += slack_r[i];
      }
      for (std::size_t j = 0; j < n; ++j) {
        slack_c[j] = std::max(0.0, problem.c()[j] - m.col[j]);
        slack_c_sum += slack_c[j];
      }
      if (deficit > break_tol &&
          (slack_r_sum <= 0.0 || slack_c_sum <= 0.0 ||
           deficit > std::min(slack_r_sum, slack_c_sum) * (1.0 + 1e-9) + 1e-15)) {
        throw InternalError("round_to_feasible: insufficient marginal slack for mass s");
      }
      if (deficit > 0.0 && slack_r_sum > 0.0 && slack_c_sum > 0.0) {
        const double f = deficit / (slack_r_sum * slack_c_sum);
        for (std::size_t i = 0; i < n; ++i) {
          if (slack_r[i] <= 0.0) continue;
          double* xi = out.entries.row(i);
          const double fi = f * slack_r[i];
          for (std::size_t j = 0; j < n; ++j) xi[j] += fi * slack_c[j];
        }
      }
    }

    const auto rep = check_feasibility(problem, out, 0.0);
    if (rep.max_violation() <= break_tol) break;
  }
  return out;
}

namespace {

TransportPlan zero_plan(std::size_t n, long iterations, bool converged) {
  TransportPlan plan;
  plan.entries = SquareMatrix(n);
  plan.iterations = iterations;
  plan.converged = converged;
  return plan;
}

TransportPlan solve_epot_log(const PotProblem& problem, const SolverConfig& config) {
  DykstraScaler scaler(problem);
  const long check_every = 10;
  double best_violation = std::numeric_limits<double>::infinity();
  long best_sweep = 0;
  long sweeps = 0;
  bool converged = false;
  std::vector<double> prev_rows, prev_cols;
  double prev_mass = 0.0;
  while (sweeps < config.max_iterations) {
    prev_rows = scaler.state().log_row_scale;
    prev_cols = scaler.state().log_col_scale;
    prev_mass = scaler.state().log_mass_scale;
    for (long k = 0; k < check_every && sweeps < config.max_iterations; ++k) {
      scaler.sweep();
      ++sweeps;
    }
    const double viol = scaler.violations().max_violation();
    // Feasibility of the implied plan alone is reached long before the
    // Dykstra corrections settle; require the scalings to be stationary too,
    // otherwise the iterate is feasible but not yet the KL projection.
    double drift = std::abs(scaler.state().log_mass_scale - prev_mass);
    for (std::size_t i = 0; i < prev_rows.size(); ++i) {
      drift = std::max(drift, std::abs(scaler.state().log_row_scale[i] - prev_rows[i]));
      drift = std::max(drift, std::abs(scaler.state().log_col_scale[i] - prev_cols[i]));
    }
    if (viol <= config.kkt_tolerance && drift <= 1e-9) {
      converged = true;
      break;
    }
    const double progress = std::max(viol, drift * 1e-3);
    if (progress < best_violation * 0.99) {
      best_violation = progress;
      best_sweep = sweeps;
    } else if (sweeps - best_sweep >= config.stall_window) {
      break;  // plateau: typical for very small eps
    }
  }
  TransportPlan plan = scaler.implied_plan();
  for (double v : plan.entries.data) {
    if (!std::isfinite(v)) throw InternalError("solve_epot: non-finite plan entry");
  }
  plan = round_to_feasible(plan, problem);
  plan.iterations = sweeps;
  plan.converged = converged;
  return plan;
}

// Direct-domain Dykstra. Underflows for small eps; retained for the
// differential test against the log-domain path.
TransportPlan solve_epot_direct(const PotProblem& problem, const SolverConfig& config) {
  const std::size_t n = problem.size();
  SquareMatrix kernel(n);
  const double f = -2.0 / problem.epsilon();
  for (std::size_t k = 0; k < n * n; ++k) {
    kernel.data[k] = std::exp(f * problem.cost().entries().data[k]);
  }
  std::vector<double> row_scale(n, 1.0), col_scale(n, 1.0);
  double mass_scale = 1.0;
  std::vector<double> corr_rows(n, 1.0), corr_cols(n, 1.0);
  double corr_mass = 1.0;
  std::vector<bool> row_alive(n), col_alive(n);
  for (std::size_t i = 0; i < n; ++i) row_alive[i] = problem.r()[i] > 0.0;
  for (std::size_t j = 0; j < n; ++j) col_alive[j] = problem.c()[j] > 0.0;

  const auto implied = [&]() {
    TransportPlan plan;
    plan.entries = SquareMatrix(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!row_alive[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_alive[j]) continue;
        plan.entries(i, j) = kernel(i, j) * row_scale[i] * col_scale[j] * mass_scale;
      }
    }
    return plan;
  };

  long sweeps = 0;
  double best_violation = std::numeric_limits<double>::infinity();
  long best_sweep = 0;
  bool converged = false;
  std::vector<double> prev_rows, prev_cols;
  double prev_mass = 1.0;
  while (sweeps < config.max_iterations) {
    prev_rows = row_scale;
    prev_cols = col_scale;
    prev_mass = mass_scale;
    for (long k = 0; k < 10 && sweeps < config.max_iterations; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!row_alive[i]) continue;
        double rs = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (col_alive[j]) rs += kernel(i, j) * col_scale[j];
        }
        rs *= row_scale[i] * corr_rows[i] * mass_scale;
        const double alpha = rs > problem.r()[i] ? problem.r()[i] / rs : 1.0;
        row_scale[i] *= corr_rows[i] * alpha;
        corr_rows[i] = 1.0 / alpha;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_alive[j]) continue;
        double cs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (row_alive[i]) cs += kernel(i, j) * row_scale[i];
        }
        cs *= col_scale[j] * corr_cols[j] * mass_scale;
        const double beta = cs > problem.c()[j] ? problem.c()[j] / cs : 1.0;
        col_scale[j] *= corr_cols[j] * beta;
        corr_cols[j] = 1.0 / beta;
      }
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!row_alive[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (col_alive[j]) total += kernel(i, j) * row_scale[i] * col_scale[j];
        }
      }
      total *= mass_scale * corr_mass;
      if (total > 0.0) {
        const double mu = problem.s() / total;
        mass_scale *= corr_mass * mu;
        corr_mass = 1.0 / mu;
      }
      ++sweeps;
    }
    const double viol = check_feasibility(problem, implied(), 0.0).max_violation();
    const auto log_ratio = [](double now, double before) {
      return (now > 0.0 && before > 0.0) ? std::abs(std::log(now / before))
                                         : (now == before ? 0.0 : 1.0);
    };
    double drift = log_ratio(mass_scale, prev_mass);
    for (std::size_t i = 0; i < n; ++i) {
      drift = std::max(drift, log_ratio(row_scale[i], prev_rows[i]));
      drift = std::max(drift, log_ratio(col_scale[i], prev_cols[i]));
    }
    if (viol <= config.kkt_tolerance && drift <= 1e-9) {
      converged = true;
      break;
    }
    const double progress = std::max(viol, drift * 1e-3);
    if (progress < best_violation * 0.99) {
      best_violation = progress;
      best_sweep = sweeps;
    } else if (sweeps - best_sweep >= config.stall_window) {
      break;
    }
  }
  TransportPlan plan = round_to_feasible(implied(), problem);
  plan.iterations = sweeps;
  plan.converged = converged;
  return plan;
}

}  // namespace

TransportPlan solve_epot(const PotProblem& problem, const SolverConfig& config) {
  require_entropic(problem);
  if (!(config.kkt_tolerance > 0.0) || config.max_iterations < 1) {
    throw ParameterError("solve_epot: bad solver configuration");
  }
  if (problem.s() == 0.0) return zero_plan(problem.size(), 0, true);
  return solve_epot_log(problem, config);
}

TransportPlan solve_epot_in_domain(const PotProblem& problem,
                                   const SolverConfig& config, DykstraDomain domain) {
  require_entropic(problem);
  if (problem.s() == 0.0) return zero_plan(problem.size(), 0, true);
  return domain == DykstraDomain::Log ? solve_epot_log(problem, config)
                                      : solve_epot_direct(problem, config);
}

}  // namespace potkit
