#pragma once

#include <vector>

#include "potkit/qpot.hpp"  // SolverConfig
#include "potkit/types.hpp"

namespace potkit {

// Log-domain Dykstra state: the implied plan is
//   X_ij = exp(log_kernel_ij + log_row_scale_i + log_col_scale_j + log_mass_scale)
// on rows/columns with positive marginal mass, and exactly 0 elsewhere.
struct ScalingState {
  SquareMatrix log_kernel;  // -2 C / eps
  std::vector<double> log_row_scale;
  std::vector<double> log_col_scale;
  double log_mass_scale = 0.0;
  // Dykstra correction terms, one per constraint set.
  std::vector<double> correction_rows;
  std::vector<double> correction_cols;
  double correction_mass = 0.0;
};

// Cyclic KL projections onto {X1 <= r}, {X^T 1 <= c} and {sum X = s} with
// Dykstra correction bookkeeping, entirely in the log domain. Exposed so the
// per-projection invariants can be tested in isolation.
class DykstraScaler {
 public:
  explicit DykstraScaler(const PotProblem& problem);

  void project_rows();
  void project_cols();
  void project_mass();
  void sweep();  // rows, then columns, then mass

  FeasibilityReport violations() const;
  TransportPlan implied_plan() const;
  const ScalingState& state() const { return state_; }

 private:
  const PotProblem& problem_;
  ScalingState state_;
  std::vector<bool> row_alive_;
  std::vector<bool> col_alive_;
};

// Cap rows at r and columns at c, then restore total mass s (scaling down, or
// distributing any deficit proportionally to the remaining row/column slack).
// At most 5 repair rounds; the result is feasible to ~1e-12 * max(1, s).
TransportPlan round_to_feasible(const TransportPlan& plan, const PotProblem& problem);

// Dykstra in the log domain followed by round_to_feasible. Stops early
// (converged = false) when the marginal violations plateau, which is the
// expected behaviour for very small eps.
TransportPlan solve_epot(const PotProblem& problem, const SolverConfig& config = {});

enum class DykstraDomain { Log, Direct };

// Direct-domain twin of solve_epot. It underflows for small eps and exists to
// differential-test the log-domain path on benign instances.
TransportPlan solve_epot_in_domain(const PotProblem& problem,
                                   const SolverConfig& config, DykstraDomain domain);

}  // namespace potkit
