#include "potkit/qpot.hpp"

#include <algorithm>
#include <cmath>

#include "potkit/dense.hpp"
#include "potkit/metrics.hpp"

namespace potkit {

namespace {

// Dual iterate laid out as [u_0..u_{n-1}, v_0..v_{n-1}, tau].
struct DualPoint {
  std::vector<double> z;
  std::size_t n = 0;

  explicit DualPoint(std::size_t size) : z(2 * size + 1, 0.0), n(size) {}
  double* u() { return z.data(); }
  double* v() { return z.data() + n; }
  const double* u() const { return z.data(); }
  const double* v() const { return z.data() + n; }
  double& tau() { return z[2 * n]; }
  double tau() const { return z[2 * n]; }

  void clamp_multipliers() {
    for (std::size_t k = 0; k < 2 * n; ++k) z[k] = std::max(z[k], 0.0);
  }
};

struct FullEval {
  double g = 0.0;            // dual objective
  double sq_slack = 0.0;     // sum of positive slacks squared
  std::vector<double> row;   // row sums of the implied plan
  std::vector<double> col;
  double total = 0.0;        // compensated total mass
  std::vector<int> row_active;  // support count per row
  std::vector<int> col_active;
  long total_active = 0;
};

class QpotWorkspace {
 public:
  explicit QpotWorkspace(const PotProblem& p)
      : n_(p.size()),
        cost_(p.cost().entries()),
        r_(p.r().values()),
        c_(p.c().values()),
        s_(p.s()),
        eps_(p.epsilon()) {}

  std::size_t n() const { return n_; }
  double s() const { return s_; }
  double eps() const { return eps_; }
  void set_eps(double eps) { eps_ = eps; }  // continuation stages

  // Dual objective only; used by line-search trials.
  double eval_g(const DualPoint& p) const {
    const double tau = p.tau();
    const double* u = p.u();
    const double* v = p.v();
    double sq = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double w = tau - u[i];
      const double* ci = cost_.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double slack = w - v[j] - ci[j];
        if (slack > 0.0) acc += slack * slack;
      }
      sq += acc;
    }
    return finish_g(p, sq);
  }

  // Objective plus the marginals and support counts of the implied plan in
  // one pass.
  FullEval eval_full(const DualPoint& p) const {
    FullEval out;
    out.row.assign(n_, 0.0);
    out.col.assign(n_, 0.0);
    out.row_active.assign(n_, 0);
    out.col_active.assign(n_, 0);
    const double tau = p.tau();
    const double* u = p.u();
    const double* v = p.v();
    const double inv_eps = 1.0 / eps_;
    CompensatedSum total;
    double sq = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double w = tau - u[i];
      const double* ci = cost_.row(i);
      double rs = 0.0;
      double acc = 0.0;
      int act = 0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double slack = w - v[j] - ci[j];
        if (slack > 0.0) {
          acc += slack * slack;
          const double x = slack * inv_eps;
          rs += x;
          out.col[j] += x;
          ++out.col_active[j];
          ++act;
        }
      }
      sq += acc;
      out.row[i] = rs;
      out.row_active[i] = act;
      out.total_active += act;
      total.add(rs);
    }
    out.sq_slack = sq;
    out.total = total.value();
    out.g = finish_g(p, sq);
    return out;
  }

  // Gradient of the dual at a point with known marginals.
  void gradient_from(const FullEval& e, std::vector<double>& d) const {
    d.resize(2 * n_ + 1);
    for (std::size_t i = 0; i < n_; ++i) d[i] = e.row[i] - r_[i];
    for (std::size_t j = 0; j < n_; ++j) d[n_ + j] = e.col[j] - c_[j];
    d[2 * n_] = s_ - e.total;
  }

  // g(b) - g(a), evaluated from the realized step b - a so the result keeps
  // full relative precision even when the improvement is far below the
  // resolution of g itself.
  double delta_g(const DualPoint& pa, const DualPoint& pb) const {
    const double dtau = pb.tau() - pa.tau();
    CompensatedSum quad;
    CompensatedSum lin;
    for (std::size_t i = 0; i < n_; ++i) {
      const double du = pb.u()[i] - pa.u()[i];
      lin.add(du * r_[i]);
    }
    for (std::size_t j = 0; j < n_; ++j) {
      lin.add((pb.v()[j] - pa.v()[j]) * c_[j]);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double wa = pa.tau() - pa.u()[i];
      const double di = dtau - (pb.u()[i] - pa.u()[i]);
      const double* ci = cost_.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double sa = wa - pa.v()[j] - ci[j];
        const double d = di - (pb.v()[j] - pa.v()[j]);
        const double sb = sa + d;
        if (sa > 0.0) {
          const double p1 = sb > 0.0 ? sb : 0.0;
          const double diff = sb > 0.0 ? d : -sa;
          acc += diff * (sa + p1);
        } else if (sb > 0.0) {
          acc += sb * sb;
        }
      }
      quad.add(acc);
    }
    return -0.5 / eps_ * quad.value() - lin.value() + dtau * s_;
  }

  // max of marginal violations, mass error and complementary slackness.
  double kkt_residual(const DualPoint& p, const FullEval& e) const {
    double res = std::abs(e.total - s_);
    const double* u = p.u();
    const double* v = p.v();
    for (std::size_t i = 0; i < n_; ++i) {
      res = std::max(res, e.row[i] - r_[i]);
      res = std::max(res, u[i] * std::abs(r_[i] - e.row[i]));
    }
    for (std::size_t j = 0; j < n_; ++j) {
      res = std::max(res, e.col[j] - c_[j]);
      res = std::max(res, v[j] * std::abs(c_[j] - e.col[j]));
    }
    return res;
  }

 private:
  double finish_g(const DualPoint& p, double sq_slack) const {
    const double* u = p.u();
    const double* v = p.v();
    CompensatedSum lin;
    for (std::size_t i = 0; i < n_; ++i) lin.add(u[i] * r_[i]);
    for (std::size_t j = 0; j < n_; ++j) lin.add(v[j] * c_[j]);
    return -0.5 / eps_ * sq_slack - lin.value() + p.tau() * s_;
  }

  std::size_t n_;
  const SquareMatrix& cost_;
  std::span<const double> r_;
  std::span<const double> c_;
  double s_;
  double eps_;
};

void require_quadratic(const PotProblem& problem) {
  if (problem.regularizer() != Regularizer::Quadratic) {
    throw ParameterError("quadratic solver called on a non-quadratic problem");
  }
}

DualPoint pack(const PotProblem& problem, const std::vector<double>& u,
               const std::vector<double>& v, double tau) {
  const std::size_t n = problem.size();
  if (u.size() != n || v.size() != n) {
    throw ShapeError("dual vectors must match the problem dimension");
  }
  DualPoint p(n);
  std::copy(u.begin(), u.end(), p.u());
  std::copy(v.begin(), v.end(), p.v());
  p.tau() = tau;
  return p;
}

}  // namespace

TransportPlan primal_from_dual(const PotProblem& problem,
                               const std::vector<double>& u,
                               const std::vector<double>& v, double tau) {
  require_quadratic(problem);
  const std::size_t n = problem.size();
  if (u.size() != n || v.size() != n) {
    throw ShapeError("dual vectors must match the problem dimension");
  }
  const SquareMatrix& cost = problem.cost().entries();
  const double inv_eps = 1.0 / problem.epsilon();
  TransportPlan plan;
  plan.entries = SquareMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = tau - u[i];
    const double* ci = cost.row(i);
    double* xi = plan.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double slack = w - v[j] - ci[j];
      xi[j] = slack > 0.0 ? slack * inv_eps : 0.0;
    }
  }
  return plan;
}

double dual_value(const PotProblem& problem, const std::vector<double>& u,
                  const std::vector<double>& v, double tau) {
  require_quadratic(problem);
  QpotWorkspace ws(problem);
  return ws.eval_g(pack(problem, u, v, tau));
}

DualGradient dual_gradient(const PotProblem& problem, const std::vector<double>& u,
                           const std::vector<double>& v, double tau) {
  require_quadratic(problem);
  QpotWorkspace ws(problem);
  const FullEval e = ws.eval_full(pack(problem, u, v, tau));
  DualGradient g;
  g.u.resize(problem.size());
  g.v.resize(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i) g.u[i] = e.row[i] - problem.r()[i];
  for (std::size_t j = 0; j < problem.size(); ++j) g.v[j] = e.col[j] - problem.c()[j];
  g.tau = problem.s() - e.total;
  return g;
}

TransportPlan mass_projection(const TransportPlan& plan, const MassVector& r,
                              const MassVector& c, double s) {
  const std::size_t n = plan.size();
  if (r.size() != n || c.size() != n) {
    throw ShapeError("mass_projection: marginals must match the plan dimension");
  }
  TransportPlan out = plan;
  double total = out.total_mass();
  if (total <= 0.0) {
    if (s > 0.0) {
      throw DegeneratePlanError("mass_projection: zero plan cannot carry positive mass");
    }
    return out;
  }
  const double mass_tol = 1e-12 * std::max(1.0, s);
  for (int round = 0; round < 3; ++round) {
    if (total <= 0.0) break;
    const double f = s / total;
    if (f != 1.0) {
      for (double& x : out.entries.data) x *= f;
    }
    auto m = detail::plan_marginals(out.entries);
    bool capped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.row[i] > r[i]) {
        const double g = m.row[i] > 0.0 ? r[i] / m.row[i] : 0.0;
        double* xi = out.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) xi[j] *= g;
        capped = true;
      }
    }
    if (capped) m = detail::plan_marginals(out.entries);
    bool col_capped = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (m.col[j] > c[j]) {
        const double g = m.col[j] > 0.0 ? c[j] / m.col[j] : 0.0;
        for (std::size_t i = 0; i < n; ++i) out.entries(i, j) *= g;
        col_capped = true;
      }
    }
    total = out.total_mass();
    if (!capped && !col_capped && std::abs(total - s) <= mass_tol) break;
  }
  if (total > 0.0 && std::abs(total - s) > mass_tol) {
    const double f = s / total;
    for (double& x : out.entries.data) x *= f;
  } else if (total <= 0.0 && s > 0.0) {
    throw DegeneratePlanError("mass_projection: repair removed all mass");
  }
  return out;
}

std::pair<TransportPlan, DualCertificate> solve_qpot(const PotProblem& problem,
                                                     const SolverConfig& config) {
  require_quadratic(problem);
  if (!(config.kkt_tolerance > 0.0) || config.max_iterations < 1) {
    throw ParameterError("solve_qpot: bad solver configuration");
  }
  const std::size_t n = problem.size();
  QpotWorkspace ws(problem);

  DualCertificate cert;
  cert.u.assign(n, 0.0);
  cert.v.assign(n, 0.0);
  cert.tau = problem.cost().min_entry();

  // s = 0: the zero plan is optimal and the initial duals certify it.
  if (problem.s() == 0.0) {
    TransportPlan plan;
    plan.entries = SquareMatrix(n);
    plan.iterations = 0;
    plan.converged = true;
    cert.dual_value = 0.0;
    cert.primal_value = 0.0;
    cert.kkt_residual = 0.0;
    return {std::move(plan), cert};
  }

  DualPoint z(n);
  z.tau() = cert.tau;  // X = 0 at the start: always dual-feasible
  DualPoint z_prev = z;
  DualPoint trial(n);

  // Continuation: the dual is solved for a geometric ladder of regularizer
  // strengths ending at the requested one, warm-starting the multipliers at
  // each stage. Plain cyclic ascent jams near the LP limit without this.
  const double target_eps = problem.epsilon();
  double eps = std::max(target_eps, 0.25 * problem.cost().max_entry());
  const SquareMatrix& cost = problem.cost().entries();
  const std::span<const double> r = problem.r().values();
  const std::span<const double> c = problem.c().values();

  // Exact conditional maximizer of the dual over one row multiplier: the
  // water-filling level L with sum_j max(0, m_j - L) = eps * target, clamped
  // at 0 (Duchi-style sorted prefix scan).
  std::vector<double> m_buf(n);
  const auto waterfill_level = [&](std::vector<double>& m, double target) {
    std::sort(m.begin(), m.end(), std::greater<>());
    double prefix = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      prefix += m[k];
      const double level = (prefix - target) / static_cast<double>(k + 1);
      const double next = k + 1 < n ? m[k + 1] : -std::numeric_limits<double>::infinity();
      if (level >= next) return level;
    }
    return (prefix - target) / static_cast<double>(n);
  };

  const auto sweep_rows = [&](DualPoint& p) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = p.tau();
      const double* ci = cost.row(i);
      for (std::size_t j = 0; j < n; ++j) m_buf[j] = w - p.v()[j] - ci[j];
      p.u()[i] = std::max(0.0, waterfill_level(m_buf, eps * r[i]));
    }
  };
  const auto sweep_cols = [&](DualPoint& p) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = p.tau();
      for (std::size_t i = 0; i < n; ++i) m_buf[i] = w - p.u()[i] - cost(i, j);
      p.v()[j] = std::max(0.0, waterfill_level(m_buf, eps * c[j]));
    }
  };

  // Exact conditional maximizer over tau: safeguarded semismooth Newton on the
  // piecewise-linear mass residual f(tau) = sum max(0, tau - q_ij) - eps*s.
  const auto sweep_tau = [&](DualPoint& p) {
    const double target = eps * ws.s();
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double tau = p.tau();
    double q_min = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 80; ++pass) {
      double f = -target;
      long active = 0;
      double qm = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double base = tau - p.u()[i];
        const double* ci = cost.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          const double slack = base - p.v()[j] - ci[j];
          if (slack > 0.0) {
            f += slack;
            ++active;
          } else {
            qm = std::min(qm, -slack);  // distance to the nearest breakpoint
          }
        }
      }
      if (std::abs(f) <= 1e-14 * std::max(target, 1.0)) break;
      if (f > 0.0) {
        hi = std::min(hi, tau);
      } else {
        lo = std::max(lo, tau);
      }
      double next;
      if (active > 0) {
        next = tau - f / static_cast<double>(active);
      } else {
        next = tau + qm + target;  // jump past the nearest breakpoint
      }
      if (!(next > lo && next < hi)) {
        if (std::isfinite(lo) && std::isfinite(hi)) {
          next = 0.5 * (lo + hi);
        } else if (std::isfinite(lo)) {
          next = lo + std::max(1.0, std::abs(lo));
        } else {
          next = hi - std::max(1.0, std::abs(hi));
        }
      }
      if (next == tau) break;
      tau = next;
      (void)q_min;
    }
    p.tau() = tau;
  };

  ws.set_eps(eps);
  FullEval ez = ws.eval_full(z);
  double kkt = ws.kkt_residual(z, ez);

  // Damped projected-Newton ascent on the dual. On the current smooth piece
  // the Hessian is -(1/eps) A^T A with one row of A per support entry
  // (+1 at u_i, +1 at v_j, -1 at tau), so the Newton direction solves
  // (A^T A + delta I) d = eps * grad over the free coordinates. The
  // Levenberg damping also pushes along the flat valley directions that the
  // cyclic sweeps cannot move through. Monotone by the Armijo test on g.
  std::vector<double> grad_buf;
  std::vector<int> free_pos(2 * n + 1);
  const auto try_polish = [&](DualPoint& zz, FullEval& ezz, double& kktzz) -> bool {
    ws.gradient_from(ezz, grad_buf);
    std::size_t m = 0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      free_pos[k] = (zz.z[k] > 0.0 || grad_buf[k] > 0.0) ? static_cast<int>(m++) : -1;
    }
    free_pos[2 * n] = static_cast<int>(m++);
    if (m > 2100) return false;

    std::vector<double> bmat(m * m, 0.0);
    const std::size_t tpos = m - 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = zz.tau() - zz.u()[i];
      const double* ci = cost.row(i);
      const int ui = free_pos[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (w - zz.v()[j] - ci[j] <= 0.0) continue;
        const int vj = free_pos[n + j];
        bmat[tpos * m + tpos] += 1.0;
        if (ui >= 0) {
          const auto a = static_cast<std::size_t>(ui);
          bmat[a * m + a] += 1.0;
          bmat[a * m + tpos] -= 1.0;
          bmat[tpos * m + a] -= 1.0;
          if (vj >= 0) {
            bmat[a * m + static_cast<std::size_t>(vj)] += 1.0;
            bmat[static_cast<std::size_t>(vj) * m + a] += 1.0;
          }
        }
        if (vj >= 0) {
          const auto b = static_cast<std::size_t>(vj);
          bmat[b * m + b] += 1.0;
          bmat[b * m + tpos] -= 1.0;
          bmat[tpos * m + b] -= 1.0;
        }
      }
    }
    double dmax = 1.0;
    for (std::size_t k = 0; k < m; ++k) dmax = std::max(dmax, bmat[k * m + k]);

    DualPoint trial_pt(n);
    for (double delta : {1e-12, 1e-7, 1e-3}) {
      std::vector<double> lhs = bmat;
      std::vector<double> rhs(m, 0.0);
      const double ridge = delta * dmax;
      for (std::size_t k = 0; k < m; ++k) lhs[k * m + k] += ridge;
      for (std::size_t k = 0; k < 2 * n + 1; ++k) {
        if (free_pos[k] >= 0) rhs[static_cast<std::size_t>(free_pos[k])] = eps * grad_buf[k];
      }
      // The ridge makes the system positive definite with eigenvalues at
      // least `ridge`, so the pivot cutoff must sit safely below it.
      auto dir_f = solve_dense(std::move(lhs), std::move(rhs), m, delta * 1e-3);
      if (!dir_f) continue;
      double alpha = 1.0;
      for (int halvings = 0; halvings < 40; ++halvings) {
        trial_pt = zz;
        double gain = 0.0;
        for (std::size_t k = 0; k < 2 * n + 1; ++k) {
          if (free_pos[k] < 0) continue;
          double val = zz.z[k] + alpha * (*dir_f)[static_cast<std::size_t>(free_pos[k])];
          if (k < 2 * n && val < 0.0) val = 0.0;
          gain += grad_buf[k] * (val - zz.z[k]);
          trial_pt.z[k] = val;
        }
        if (gain <= 0.0) break;
        const double dg = ws.delta_g(zz, trial_pt);
        if (dg >= config.armijo_slope * gain && dg > 0.0) {
          zz = trial_pt;
          ezz = ws.eval_full(zz);
          kktzz = ws.kkt_residual(zz, ezz);
          return true;
        }
        alpha *= config.armijo_contraction;
      }
    }
    return false;
  };

  DualPoint best = z;
  double best_kkt = std::numeric_limits<double>::infinity();
  double best_g = ez.g;
  bool final_stage = eps == target_eps;
  if (final_stage) best_kkt = kkt;

  const double stage_tol =
      std::max(1e-7 * std::max(1.0, problem.s()), config.kkt_tolerance);
  double t_momentum = 1.0;
  long iterations = 0;
  bool converged = final_stage && kkt <= config.kkt_tolerance;
  double last_kkt = kkt;
  long last_progress = 0;
  long next_polish = 30;
  long polish_backoff = 30;

  while (!converged && iterations < config.max_iterations) {
    ++iterations;

    DualPoint z_sweep = z;
    sweep_rows(z_sweep);
    sweep_cols(z_sweep);
    sweep_tau(z_sweep);
    // Recenter: shifting all u (or all v) together with tau leaves every
    // slack unchanged and improves the dual by shift * (|r|_1 - s); the
    // blocks cannot make this move on their own.
    {
      double a = z_sweep.u()[0];
      for (std::size_t i = 1; i < n; ++i) a = std::min(a, z_sweep.u()[i]);
      if (a > 0.0) {
        for (std::size_t i = 0; i < n; ++i) z_sweep.u()[i] -= a;
        z_sweep.tau() -= a;
      }
      double bshift = z_sweep.v()[0];
      for (std::size_t j = 1; j < n; ++j) bshift = std::min(bshift, z_sweep.v()[j]);
      if (bshift > 0.0) {
        for (std::size_t j = 0; j < n; ++j) z_sweep.v()[j] -= bshift;
        z_sweep.tau() -= bshift;
      }
    }
    double g_sweep = ws.eval_g(z_sweep);

    // Backtracking extrapolation along the sweep momentum; kept only when it
    // improves the dual, so the per-iteration dual values stay nondecreasing.
    if (config.acceleration == Acceleration::Nesterov && t_momentum > 1.0) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      double beta = (t_momentum - 1.0) / t_next;
      bool improved = false;
      for (int tries = 0; tries < 4 && !improved; ++tries) {
        for (std::size_t k = 0; k < 2 * n + 1; ++k) {
          trial.z[k] = z_sweep.z[k] + beta * (z_sweep.z[k] - z_prev.z[k]);
        }
        trial.clamp_multipliers();
        if (ws.delta_g(z_sweep, trial) > 0.0) {
          z_sweep = trial;
          g_sweep = ws.eval_g(z_sweep);
          improved = true;
        }
        beta *= config.armijo_contraction;
      }
      t_momentum = improved ? t_next : 1.0;  // function-value restart
    } else if (config.acceleration == Acceleration::Nesterov) {
      t_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    }

    z_prev = z;
    z = z_sweep;
    if (final_stage && config.dual_value_log) config.dual_value_log->push_back(g_sweep);

    ez = ws.eval_full(z);
    kkt = ws.kkt_residual(z, ez);
    if (final_stage && kkt < best_kkt) {
      best = z;
      best_kkt = kkt;
      best_g = ez.g;
    }

    if (!final_stage) {
      // Loose stage exit; the stage only provides a warm start.
      const bool stage_done = kkt <= stage_tol || iterations - last_progress >= 60;
      if (kkt < last_kkt * 0.999) {
        last_kkt = kkt;
        last_progress = iterations;
      }
      if (stage_done) {
        eps = std::max(target_eps, eps * 0.125);
        final_stage = eps == target_eps;
        ws.set_eps(eps);
        ez = ws.eval_full(z);
        kkt = ws.kkt_residual(z, ez);
        if (final_stage) {
          best = z;
          best_kkt = kkt;
          best_g = ez.g;
        }
        z_prev = z;  // momentum across stages is meaningless
        t_momentum = 1.0;
        last_kkt = kkt;
        last_progress = iterations;
      }
      continue;
    }

    converged = kkt <= config.kkt_tolerance;

    if (!converged && iterations >= next_polish) {
      z_prev = z;
      bool any = false;
      for (int steps = 0; steps < 8; ++steps) {
        if (!try_polish(z, ez, kkt)) break;
        any = true;
        if (kkt < best_kkt) {
          best = z;
          best_kkt = kkt;
          best_g = ez.g;
        }
        if (kkt <= config.kkt_tolerance) break;
      }
      if (any) {
        t_momentum = 1.0;
        converged = kkt <= config.kkt_tolerance;
        if (kkt < last_kkt) {
          last_kkt = kkt;
          last_progress = iterations;
        }
        polish_backoff = 30;
      } else {
        polish_backoff = std::min(polish_backoff * 2, 2000l);
      }
      next_polish = iterations + polish_backoff;
    }

    // Stop when the residual has stopped moving. Progress under momentum is
    // bursty, so the window here is generous.
    if (kkt < last_kkt * 0.999) {
      last_kkt = kkt;
      last_progress = iterations;
    } else if (iterations - last_progress >= 20 * config.stall_window) {
      break;
    }
  }

  if (converged || !std::isfinite(best_kkt)) {
    // Converged, or the iteration budget ran out before the final stage.
    if (!final_stage) {
      ws.set_eps(target_eps);
      eps = target_eps;
      ez = ws.eval_full(z);
      kkt = ws.kkt_residual(z, ez);
    }
    best = z;
    best_kkt = kkt;
    best_g = ez.g;
  }

  std::copy(best.u(), best.u() + n, cert.u.begin());
  std::copy(best.v(), best.v() + n, cert.v.begin());
  cert.tau = best.tau();
  cert.dual_value = best_g;
  cert.kkt_residual = best_kkt;

  TransportPlan plan = primal_from_dual(problem, cert.u, cert.v, cert.tau);
  if (plan.total_mass() > 0.0) {
    plan = mass_projection(plan, problem.r(), problem.c(), problem.s());
  }
  plan.iterations = iterations;
  plan.converged = converged;
  cert.primal_value = objective_qpot(problem, plan);
  return {std::move(plan), cert};
}

}  // namespace potkit
