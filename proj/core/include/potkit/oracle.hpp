#pragma once

#include <utility>
#include <vector>

#include "potkit/qpot.hpp"
#include "potkit/types.hpp"

namespace potkit {

// One candidate KKT configuration: which entries are forced to zero and which
// marginal constraints hold with equality.
struct ActiveSetPattern {
  std::vector<bool> zero_entries;  // n*n, row-major
  std::vector<bool> tight_rows;    // n
  std::vector<bool> tight_cols;    // n
};

struct OracleOptions {
  // Scan every pattern instead of stopping at the first accepted one, and
  // check that all accepted plans agree entrywise (uniqueness audit).
  bool verify_uniqueness = false;
  double uniqueness_tol = 1e-9;
};

// Ground-truth quadratic solve by exhaustive enumeration of active sets over
// the KKT system. Hard-capped at n <= 4.
std::pair<TransportPlan, DualCertificate> oracle_qpot(const PotProblem& problem,
                                                      const OracleOptions& options = {});

// Ground-truth entropic solve: enumerate tight-row/tight-column patterns and
// refine each smooth stationarity system by damped Newton. Hard-capped at n <= 4.
TransportPlan oracle_epot(const PotProblem& problem, const OracleOptions& options = {});

}  // namespace potkit
