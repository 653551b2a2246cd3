#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "potkit/rng.hpp"
#include "potkit/types.hpp"

namespace potkit::test {

// Random instance in the shape used throughout the suite: uniform marginals
// rescaled to mass 1 and uniform costs in [0, 1].
inline PotProblem random_problem(Rng& rng, std::size_t n, double lambda, double eps,
                                 Regularizer reg) {
  std::vector<double> rv(n), cv(n);
  double rs = 0.0, cs = 0.0;
  for (auto& x : rv) {
    x = rng.uniform01();
    rs += x;
  }
  for (auto& x : cv) {
    x = rng.uniform01();
    cs += x;
  }
  for (auto& x : rv) x /= rs;
  for (auto& x : cv) x /= cs;
  SquareMatrix m(n);
  for (auto& x : m.data) x = rng.uniform01();
  MassVector r(std::move(rv));
  MassVector c(std::move(cv));
  const double s = lambda * std::min(r.total(), c.total());
  return PotProblem(std::move(r), std::move(c), CostMatrix(std::move(m)), s, eps, reg);
}

inline TransportPlan plan_from(std::size_t n, std::vector<double> entries) {
  TransportPlan plan;
  plan.entries = SquareMatrix(n, std::move(entries));
  return plan;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace potkit::test
