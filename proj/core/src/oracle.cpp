#include "potkit/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "potkit/dense.hpp"
#include "potkit/numeric.hpp"

namespace potkit {

namespace {

constexpr double kAcceptTol = 1e-10;

struct Instance {
  std::size_t n;
  const PotProblem* problem;
  std::vector<double> cost;  // row-major copy for fast access
};

void require_oracle_size(const PotProblem& problem) {
  if (problem.size() > 4) {
    throw ParameterError("oracle: instances larger than n = 4 are rejected");
  }
}

// ---------------------------------------------------------------------------
// Quadratic oracle
// ---------------------------------------------------------------------------

struct QpotCandidate {
  std::vector<double> u, v;
  double tau = 0.0;
  std::vector<double> x;  // n*n
  double residual = 0.0;
};

// Solve the linear KKT system induced by (support, tight rows, tight cols) and
// verify the full KKT conditions. Returns false when the system is singular or
// any condition fails.
bool try_pattern(const Instance& inst, unsigned support, unsigned tight_rows,
                 unsigned tight_cols, QpotCandidate& out) {
  const std::size_t n = inst.n;
  const PotProblem& p = *inst.problem;
  const double eps = p.epsilon();

  std::array<int, 4> upos{};
  std::array<int, 4> vpos{};
  upos.fill(-1);
  vpos.fill(-1);
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tight_rows & (1u << i)) upos[i] = static_cast<int>(m++);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (tight_cols & (1u << j)) vpos[j] = static_cast<int>(m++);
  }
  const std::size_t tau_pos = m++;

  std::vector<double> a(m * m, 0.0), b(m, 0.0);
  std::size_t eq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(tight_rows & (1u << i))) continue;
    double rhs = eps * p.r()[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (!(support & (1u << (i * n + j)))) continue;
      a[eq * m + tau_pos] += 1.0;
      a[eq * m + upos[i]] -= 1.0;
      if (vpos[j] >= 0) a[eq * m + vpos[j]] -= 1.0;
      rhs += inst.cost[i * n + j];
    }
    b[eq++] = rhs;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(tight_cols & (1u << j))) continue;
    double rhs = eps * p.c()[j];
    for (std::size_t i = 0; i < n; ++i) {
      if (!(support & (1u << (i * n + j)))) continue;
      a[eq * m + tau_pos] += 1.0;
      a[eq * m + vpos[j]] -= 1.0;
      if (upos[i] >= 0) a[eq * m + upos[i]] -= 1.0;
      rhs += inst.cost[i * n + j];
    }
    b[eq++] = rhs;
  }
  {
    double rhs = eps * p.s();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!(support & (1u << (i * n + j)))) continue;
        a[eq * m + tau_pos] += 1.0;
        if (upos[i] >= 0) a[eq * m + upos[i]] -= 1.0;
        if (vpos[j] >= 0) a[eq * m + vpos[j]] -= 1.0;
        rhs += inst.cost[i * n + j];
      }
    }
    b[eq++] = rhs;
  }

  auto sol = solve_dense(std::move(a), std::move(b), m);
  if (!sol) return false;

  out.u.assign(n, 0.0);
  out.v.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (upos[i] >= 0) out.u[i] = (*sol)[upos[i]];
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (vpos[j] >= 0) out.v[j] = (*sol)[vpos[j]];
  }
  out.tau = (*sol)[tau_pos];

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, -out.u[i]);
  for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, -out.v[j]);
  if (worst > kAcceptTol) return false;

  out.x.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double slack = out.tau - inst.cost[i * n + j] - out.u[i] - out.v[j];
      if (support & (1u << (i * n + j))) {
        if (slack < -kAcceptTol * eps) return false;  // negative entry
        out.x[i * n + j] = std::max(slack, 0.0) / eps;
      } else {
        if (slack > kAcceptTol) return false;  // zero entry with positive slack
      }
    }
  }

  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += out.x[i * n + j];
    mass += row;
    const double gap = row - p.r()[i];
    if (tight_rows & (1u << i)) {
      worst = std::max(worst, std::abs(gap));
    } else if (gap > kAcceptTol) {
      return false;
    }
    worst = std::max(worst, out.u[i] * std::abs(gap));
  }
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += out.x[i * n + j];
    const double gap = col - p.c()[j];
    if (tight_cols & (1u << j)) {
      worst = std::max(worst, std::abs(gap));
    } else if (gap > kAcceptTol) {
      return false;
    }
    worst = std::max(worst, out.v[j] * std::abs(gap));
  }
  worst = std::max(worst, std::abs(mass - p.s()));
  if (worst > kAcceptTol) return false;
  out.residual = worst;
  return true;
}

// Necessary support structure: if (i,j) and (i',j') both carry mass and the
// swapped pairing is no more expensive, at least one swapped cell must also
// carry mass (their dual slacks sum to something positive).
bool support_consistent(const Instance& inst, unsigned support) {
  const std::size_t n = inst.n;
  std::array<std::array<bool, 4>, 4> in{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      in[i][j] = (support & (1u << (i * n + j))) != 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!in[i][j]) continue;
      for (std::size_t k = i + 1; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          if (l == j || !in[k][l]) continue;
          if (in[i][l] || in[k][j]) continue;
          const double direct = inst.cost[i * n + j] + inst.cost[k * n + l];
          const double swapped = inst.cost[i * n + l] + inst.cost[k * n + j];
          if (swapped <= direct) return false;
        }
      }
    }
  }
  return true;
}

DualCertificate make_certificate(const Instance& inst, const QpotCandidate& cand) {
  const PotProblem& p = *inst.problem;
  DualCertificate cert;
  cert.u = cand.u;
  cert.v = cand.v;
  cert.tau = cand.tau;
  cert.kkt_residual = cand.residual;
  CompensatedSum primal, sq, lin;
  for (std::size_t k = 0; k < cand.x.size(); ++k) {
    primal.add(inst.cost[k] * cand.x[k] + 0.5 * p.epsilon() * cand.x[k] * cand.x[k]);
    sq.add(cand.x[k] * cand.x[k]);
  }
  for (std::size_t i = 0; i < inst.n; ++i) lin.add(cand.u[i] * p.r()[i]);
  for (std::size_t j = 0; j < inst.n; ++j) lin.add(cand.v[j] * p.c()[j]);
  cert.primal_value = primal.value();
  cert.dual_value =
      -0.5 * p.epsilon() * sq.value() - lin.value() + cand.tau * p.s();
  return cert;
}

}  // namespace

std::pair<TransportPlan, DualCertificate> oracle_qpot(const PotProblem& problem,
                                                      const OracleOptions& options) {
  require_oracle_size(problem);
  if (problem.regularizer() != Regularizer::Quadratic) {
    throw ParameterError("oracle_qpot: problem is not quadratic");
  }
  const std::size_t n = problem.size();
  Instance inst{n, &problem, problem.cost().entries().data};

  if (problem.s() == 0.0) {
    TransportPlan plan;
    plan.entries = SquareMatrix(n);
    DualCertificate cert;
    cert.u.assign(n, 0.0);
    cert.v.assign(n, 0.0);
    cert.tau = problem.cost().min_entry();
    return {std::move(plan), cert};
  }

  // Entries sorted by decreasing cost: the optimizer zeroes expensive cells
  // first, so candidate zero sets built from this order are found early.
  const std::size_t cells = n * n;
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return inst.cost[a] > inst.cost[b];
  });

  const unsigned full = cells == 16 ? 0xFFFFu : ((1u << cells) - 1u);
  bool found = false;
  QpotCandidate best;
  QpotCandidate cand;

  std::vector<std::size_t> comb;
  for (std::size_t zsize = 0; zsize <= cells && !(found && !options.verify_uniqueness);
       ++zsize) {
    comb.resize(zsize);
    std::iota(comb.begin(), comb.end(), 0);
    bool more = true;
    while (more) {
      unsigned zero_mask = 0;
      for (std::size_t c : comb) zero_mask |= 1u << order[c];
      const unsigned support = full & ~zero_mask;

      if (support != 0 && support_consistent(inst, support)) {
        std::array<unsigned, 4> row_entries{}, col_entries{};
        unsigned rows_with_support = 0, cols_with_support = 0;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (support & (1u << (i * n + j))) {
              row_entries[i] |= 1u << j;
              col_entries[j] |= 1u << i;
            }
          }
          if (row_entries[i]) rows_with_support |= 1u << i;
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (col_entries[j]) cols_with_support |= 1u << j;
        }
        const unsigned row_lim = 1u << n;
        for (unsigned tr = 0; tr < row_lim; ++tr) {
          if (tr & ~rows_with_support) continue;
          // Tight rows pour their whole marginal into the plan, so their
          // combined mass can never exceed s.
          double tight_r = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (tr & (1u << i)) tight_r += problem.r()[i];
          }
          if (tight_r > problem.s() + 1e-9) continue;
          for (unsigned tc = 0; tc < row_lim; ++tc) {
            if (tc & ~cols_with_support) continue;
            double tight_c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              if (tc & (1u << j)) tight_c += problem.c()[j];
            }
            if (tight_c > problem.s() + 1e-9) continue;
            if (!try_pattern(inst, support, tr, tc, cand)) continue;
            if (!found) {
              best = cand;
              found = true;
              if (!options.verify_uniqueness) goto done;
            } else if (options.verify_uniqueness) {
              for (std::size_t k = 0; k < cells; ++k) {
                if (std::abs(best.x[k] - cand.x[k]) > options.uniqueness_tol) {
                  throw InternalError("oracle_qpot: accepted patterns disagree");
                }
              }
            }
          }
        }
      }

      // next combination of indices into `order`
      more = false;
      for (std::size_t pos = zsize; pos-- > 0;) {
        if (comb[pos] + (zsize - pos) < cells) {
          ++comb[pos];
          for (std::size_t q = pos + 1; q < zsize; ++q) comb[q] = comb[q - 1] + 1;
          more = true;
          break;
        }
      }
      if (zsize == 0) more = false;
    }
  }
done:
  if (!found) {
    throw InternalError("oracle_qpot: no active-set pattern satisfied the KKT system");
  }
  TransportPlan plan;
  plan.entries = SquareMatrix(n, best.x);
  plan.converged = true;
  return {std::move(plan), make_certificate(inst, best)};
}

// ---------------------------------------------------------------------------
// Entropic oracle
// ---------------------------------------------------------------------------

namespace {

struct EpotEval {
  std::vector<double> x;       // n*n, zero on dead rows/cols
  std::vector<double> rowsum;  // per row
  std::vector<double> colsum;
  double total = 0.0;
  bool finite = true;
};

EpotEval epot_eval(const Instance& inst, const std::vector<double>& u,
                   const std::vector<double>& v, double tau,
                   const std::vector<bool>& row_alive,
                   const std::vector<bool>& col_alive) {
  const std::size_t n = inst.n;
  const double f = 2.0 / inst.problem->epsilon();
  EpotEval e;
  e.x.assign(n * n, 0.0);
  e.rowsum.assign(n, 0.0);
  e.colsum.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_alive[j]) continue;
      const double expo = f * (tau - inst.cost[i * n + j] - u[i] - v[j]);
      if (expo > 700.0) {
        e.finite = false;
        return e;
      }
      const double x = std::exp(expo);
      e.x[i * n + j] = x;
      e.rowsum[i] += x;
      e.colsum[j] += x;
      e.total += x;
    }
  }
  return e;
}

double epot_residual_norm(const Instance& inst, const EpotEval& e, unsigned tr,
                          unsigned tc) {
  if (!e.finite) return std::numeric_limits<double>::infinity();
  const PotProblem& p = *inst.problem;
  double norm = std::abs(e.total - p.s());
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (tr & (1u << i)) norm = std::max(norm, std::abs(e.rowsum[i] - p.r()[i]));
  }
  for (std::size_t j = 0; j < inst.n; ++j) {
    if (tc & (1u << j)) norm = std::max(norm, std::abs(e.colsum[j] - p.c()[j]));
  }
  return norm;
}

}  // namespace

TransportPlan oracle_epot(const PotProblem& problem, const OracleOptions& options) {
  require_oracle_size(problem);
  if (problem.regularizer() != Regularizer::Entropic) {
    throw ParameterError("oracle_epot: problem is not entropic");
  }
  const std::size_t n = problem.size();
  Instance inst{n, &problem, problem.cost().entries().data};
  if (problem.s() == 0.0) {
    TransportPlan plan;
    plan.entries = SquareMatrix(n);
    return plan;
  }

  std::vector<bool> row_alive(n), col_alive(n);
  unsigned alive_rows = 0, alive_cols = 0;
  for (std::size_t i = 0; i < n; ++i) {
    row_alive[i] = problem.r()[i] > 0.0;
    if (row_alive[i]) alive_rows |= 1u << i;
  }
  for (std::size_t j = 0; j < n; ++j) {
    col_alive[j] = problem.c()[j] > 0.0;
    if (col_alive[j]) alive_cols |= 1u << j;
  }

  // Mass-feasible start: u = v = 0, tau chosen so the implied total equals s.
  std::vector<double> log_terms;
  const double f = 2.0 / problem.epsilon();
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_alive[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (col_alive[j]) log_terms.push_back(-f * inst.cost[i * n + j]);
    }
  }
  const double tau0 = (std::log(problem.s()) - log_sum_exp(log_terms)) / f;

  bool found = false;
  std::vector<double> best_x;
  long best_iters = 0;

  const unsigned lim = 1u << n;
  for (unsigned tr = 0; tr < lim; ++tr) {
    if (tr & ~alive_rows) continue;
    for (unsigned tc = 0; tc < lim; ++tc) {
      if (tc & ~alive_cols) continue;

      std::vector<double> u(n, 0.0), v(n, 0.0);
      double tau = tau0;
      std::vector<int> upos(n, -1), vpos(n, -1);
      std::size_t m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (tr & (1u << i)) upos[i] = static_cast<int>(m++);
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (tc & (1u << j)) vpos[j] = static_cast<int>(m++);
      }
      const std::size_t tau_pos = m++;

      // Scaling prelude in the log domain: brings the duals to the basin
      // where the stiff Newton map contracts.
      const double half_eps = problem.epsilon() / 2.0;
      for (int round = 0; round < 40; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
          if (!(tr & (1u << i))) continue;
          std::vector<double> terms;
          for (std::size_t j = 0; j < n; ++j) {
            if (col_alive[j]) terms.push_back(f * (tau - inst.cost[i * n + j] - u[i] - v[j]));
          }
          u[i] += half_eps * (log_sum_exp(terms) - std::log(problem.r()[i]));
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (!(tc & (1u << j))) continue;
          std::vector<double> terms;
          for (std::size_t i = 0; i < n; ++i) {
            if (row_alive[i]) terms.push_back(f * (tau - inst.cost[i * n + j] - u[i] - v[j]));
          }
          v[j] += half_eps * (log_sum_exp(terms) - std::log(problem.c()[j]));
        }
        std::vector<double> terms;
        for (std::size_t i = 0; i < n; ++i) {
          if (!row_alive[i]) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (col_alive[j]) terms.push_back(f * (tau - inst.cost[i * n + j] - u[i] - v[j]));
          }
        }
        tau += half_eps * (std::log(problem.s()) - log_sum_exp(terms));
      }

      EpotEval e = epot_eval(inst, u, v, tau, row_alive, col_alive);
      double norm = epot_residual_norm(inst, e, tr, tc);
      bool ok = std::isfinite(norm);
      long iters = 0;
      for (; ok && iters < 100 && norm > 1e-12; ++iters) {
        std::vector<double> a(m * m, 0.0), b(m, 0.0);
        std::size_t eq = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!(tr & (1u << i))) continue;
          a[eq * m + upos[i]] = -f * e.rowsum[i];
          a[eq * m + tau_pos] = f * e.rowsum[i];
          for (std::size_t j = 0; j < n; ++j) {
            if (vpos[j] >= 0) a[eq * m + vpos[j]] = -f * e.x[i * n + j];
          }
          b[eq++] = problem.r()[i] - e.rowsum[i];
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (!(tc & (1u << j))) continue;
          a[eq * m + vpos[j]] = -f * e.colsum[j];
          a[eq * m + tau_pos] = f * e.colsum[j];
          for (std::size_t i = 0; i < n; ++i) {
            if (upos[i] >= 0) a[eq * m + upos[i]] = -f * e.x[i * n + j];
          }
          b[eq++] = problem.c()[j] - e.colsum[j];
        }
        {
          a[eq * m + tau_pos] = f * e.total;
          for (std::size_t i = 0; i < n; ++i) {
            if (upos[i] >= 0) a[eq * m + upos[i]] = -f * e.rowsum[i];
          }
          for (std::size_t j = 0; j < n; ++j) {
            if (vpos[j] >= 0) a[eq * m + vpos[j]] = -f * e.colsum[j];
          }
          b[eq++] = problem.s() - e.total;
        }
        auto step = solve_dense(std::move(a), std::move(b), m);
        if (!step) {
          ok = false;
          break;
        }
        // Trust region on the exponents: the stationarity map is doubly
        // exponential in the duals, so cap the per-step exponent motion.
        double expo_rate = std::abs((*step)[tau_pos]);
        for (std::size_t q = 0; q + 1 < m; ++q) {
          expo_rate = std::max(expo_rate, std::abs((*step)[q]) + std::abs((*step)[tau_pos]));
        }
        expo_rate *= f;
        double t = expo_rate > 4.0 ? 4.0 / expo_rate : 1.0;
        bool moved = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
          std::vector<double> u2 = u, v2 = v;
          double tau2 = tau;
          for (std::size_t i = 0; i < n; ++i) {
            if (upos[i] >= 0) u2[i] += t * (*step)[upos[i]];
          }
          for (std::size_t j = 0; j < n; ++j) {
            if (vpos[j] >= 0) v2[j] += t * (*step)[vpos[j]];
          }
          tau2 += t * (*step)[tau_pos];
          EpotEval e2 = epot_eval(inst, u2, v2, tau2, row_alive, col_alive);
          const double norm2 = epot_residual_norm(inst, e2, tr, tc);
          if (norm2 <= (1.0 - 1e-4 * t) * norm) {
            u = std::move(u2);
            v = std::move(v2);
            tau = tau2;
            e = std::move(e2);
            norm = norm2;
            moved = true;
            break;
          }
          t *= 0.5;
        }
        if (!moved) {
          ok = false;
          break;
        }
      }
      if (!ok || norm > 1e-12) continue;

      // KKT acceptance: dual feasibility and off-pattern primal feasibility.
      bool accept = true;
      for (std::size_t i = 0; i < n && accept; ++i) {
        if (u[i] < -kAcceptTol) accept = false;
        if (!(tr & (1u << i)) && row_alive[i] &&
            e.rowsum[i] > problem.r()[i] + kAcceptTol) {
          accept = false;
        }
      }
      for (std::size_t j = 0; j < n && accept; ++j) {
        if (v[j] < -kAcceptTol) accept = false;
        if (!(tc & (1u << j)) && col_alive[j] &&
            e.colsum[j] > problem.c()[j] + kAcceptTol) {
          accept = false;
        }
      }
      if (!accept) continue;

      if (!found) {
        best_x = e.x;
        best_iters = iters;
        found = true;
        if (!options.verify_uniqueness) goto done;
      } else if (options.verify_uniqueness) {
        for (std::size_t k = 0; k < n * n; ++k) {
          if (std::abs(best_x[k] - e.x[k]) > options.uniqueness_tol) {
            throw InternalError("oracle_epot: accepted patterns disagree");
          }
        }
      }
    }
  }
done:
  if (!found) {
    throw InternalError("oracle_epot: Newton failed on every tightness pattern");
  }
  TransportPlan plan;
  plan.entries = SquareMatrix(n, best_x);
  plan.iterations = best_iters;
  plan.converged = true;
  return plan;
}

}  // namespace potkit
