#pragma once

#include <vector>

#include "potkit/types.hpp"

namespace potkit {

// s = lambda * min(|r|, |c|).
double lambda_to_mass(double lambda, const MassVector& r, const MassVector& c);

// <C, X> + (eps/2) * ||X||_F^2.
double objective_qpot(const PotProblem& problem, const TransportPlan& plan);

// <C, X> + (eps/2) * sum(X log X - X), with 0 log 0 := 0.
double objective_epot(const PotProblem& problem, const TransportPlan& plan);

// Marginal/mass diagnostics; the caller judges them against its tolerance.
FeasibilityReport check_feasibility(const PotProblem& problem,
                                    const TransportPlan& plan, double tol);

// Fraction of entries with |value| < threshold.
double sparsity(const TransportPlan& plan, double threshold);

// C_ij = ||a_i - b_j||_2^2, optionally divided by the max entry.
CostMatrix cost_matrix_from_positions(const std::vector<std::vector<double>>& a,
                                      const std::vector<std::vector<double>>& b,
                                      bool normalize);

namespace detail {
// Row sums, column sums and compensated total of a plan in one pass.
struct Marginals {
  std::vector<double> row;
  std::vector<double> col;
  double total = 0.0;
};
Marginals plan_marginals(const SquareMatrix& x);
}  // namespace detail

}  // namespace potkit
