#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace potkit {

// Solve A x = b in place by Gaussian elimination with partial pivoting.
// Returns nullopt when a pivot falls below `pivot_tol` times the matrix scale
// (the caller decides whether that is an error or just a skipped pattern).
std::optional<std::vector<double>> solve_dense(std::vector<double> a,
                                               std::vector<double> b,
                                               std::size_t n,
                                               double pivot_tol = 1e-12);

// Like solve_dense, but tolerates rank deficiency: columns without a usable
// pivot have their variable fixed to 0, and the system is only rejected when
// the leftover equations are inconsistent at `consistency_tol` (relative to
// the right-hand side scale).
std::optional<std::vector<double>> solve_dense_rank_aware(
    std::vector<double> a, std::vector<double> b, std::size_t n,
    double pivot_tol = 1e-12, double consistency_tol = 1e-9);

}  // namespace potkit
