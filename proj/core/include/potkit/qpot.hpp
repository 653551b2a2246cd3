#pragma once

#include <utility>
#include <vector>

#include "potkit/types.hpp"

namespace potkit {

// Multipliers (u, v, tau) for the row caps, column caps and the mass equality,
// plus the residuals that certify (approximate) optimality of a plan.
struct DualCertificate {
  std::vector<double> u;  // row multipliers, entrywise >= 0
  std::vector<double> v;  // column multipliers, entrywise >= 0
  double tau = 0.0;       // mass-equality multiplier (free sign)
  double dual_value = 0.0;
  double primal_value = 0.0;
  double kkt_residual = 0.0;
};

enum class Acceleration { None, Nesterov };

struct SolverConfig {
  double kkt_tolerance = 1e-9;
  long max_iterations = 50000;
  Acceleration acceleration = Acceleration::Nesterov;
  // Armijo backtracking parameters.
  double armijo_contraction = 0.5;
  double armijo_slope = 1e-4;
  // Dykstra stall rule (entropic solver): bail out when the best violation has
  // not improved by at least 1% over this many sweeps.
  long stall_window = 500;
  // When set, the quadratic solver appends the dual objective after every
  // iteration (used by the monotone-ascent tests).
  std::vector<double>* dual_value_log = nullptr;
};

// X_ij = max(0, (tau - C_ij - u_i - v_j) / eps): the unique minimizer of the
// inner Lagrangian of the quadratic problem. Ties at the kink go to 0.
TransportPlan primal_from_dual(const PotProblem& problem,
                               const std::vector<double>& u,
                               const std::vector<double>& v, double tau);

// Lagrange dual objective -(eps/2)||X||_F^2 - u.r - v.c + tau*s at the plan
// implied by (u, v, tau).
double dual_value(const PotProblem& problem, const std::vector<double>& u,
                  const std::vector<double>& v, double tau);

struct DualGradient {
  std::vector<double> u;  // (X 1)_i - r_i
  std::vector<double> v;  // (X^T 1)_j - c_j
  double tau = 0.0;       // s - sum X
};

DualGradient dual_gradient(const PotProblem& problem, const std::vector<double>& u,
                           const std::vector<double>& v, double tau);

// Rescale a plan to total mass s, then cap rows at r and columns at c, with up
// to 3 repair rounds. Entries are only ever multiplied by nonnegative factors,
// so the support never grows.
TransportPlan mass_projection(const TransportPlan& plan, const MassVector& r,
                              const MassVector& c, double s);

// Projected dual ascent on the concave quadratic dual, Armijo line search,
// Nesterov acceleration with restart on nonmonotone dual values. The returned
// plan has been passed through mass_projection whenever it carries mass.
std::pair<TransportPlan, DualCertificate> solve_qpot(const PotProblem& problem,
                                                     const SolverConfig& config = {});

}  // namespace potkit
