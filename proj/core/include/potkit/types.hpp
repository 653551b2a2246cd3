#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "potkit/errors.hpp"
#include "potkit/matrix.hpp"
#include "potkit/numeric.hpp"

namespace potkit {

// Nonnegative histogram over n bins. Plays both the source (r) and target (c)
// roles of a transport problem.
class MassVector {
 public:
  explicit MassVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ShapeError("MassVector: need at least one bin");
    for (double v : values_) {
      if (!(v >= 0.0)) throw DomainError("MassVector: negative or NaN bin mass");
    }
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  // ||.||_1; entries are nonnegative so this is the total mass.
  double total() const { return compensated_total(values_); }

 private:
  std::vector<double> values_;
};

// n-by-n nonnegative cost. `normalized` records that the matrix was divided
// by its max entry (so the max is 1 unless the matrix is identically zero).
class CostMatrix {
 public:
  explicit CostMatrix(SquareMatrix entries, bool normalized = false)
      : entries_(std::move(entries)), normalized_(normalized) {
    if (entries_.n == 0) throw ShapeError("CostMatrix: empty");
    double mx = 0.0;
    for (double v : entries_.data) {
      if (!(v >= 0.0)) throw DomainError("CostMatrix: negative or NaN cost");
      mx = std::max(mx, v);
    }
    if (normalized_ && mx != 0.0 && std::abs(mx - 1.0) > 1e-12) {
      throw DomainError("CostMatrix: normalized flag set but max entry != 1");
    }
  }

  std::size_t size() const { return entries_.n; }
  bool normalized() const { return normalized_; }
  const SquareMatrix& entries() const { return entries_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  double max_entry() const {
    double mx = 0.0;
    for (double v : entries_.data) mx = std::max(mx, v);
    return mx;
  }
  double min_entry() const {
    double mn = entries_.data.empty() ? 0.0 : entries_.data[0];
    for (double v : entries_.data) mn = std::min(mn, v);
    return mn;
  }

 private:
  SquareMatrix entries_;
  bool normalized_;
};

enum class Regularizer { Quadratic, Entropic };

// A complete partial-transport instance: marginals, cost, transported mass s,
// regularizer kind and strength.
class PotProblem {
 public:
  PotProblem(MassVector r, MassVector c, CostMatrix cost, double s,
             double epsilon, Regularizer regularizer)
      : r_(std::move(r)),
        c_(std::move(c)),
        cost_(std::move(cost)),
        s_(s),
        epsilon_(epsilon),
        regularizer_(regularizer) {
    const std::size_t n = r_.size();
    if (c_.size() != n || cost_.size() != n) {
      throw ShapeError("PotProblem: r, c and cost must share one dimension");
    }
    if (!(epsilon_ > 0.0)) throw ParameterError("PotProblem: epsilon must be > 0");
    const double cap = std::min(r_.total(), c_.total());
    if (!(s_ >= 0.0) || s_ > cap * (1.0 + 1e-12) + 1e-15) {
      throw ParameterError("PotProblem: need 0 <= s <= min(|r|, |c|)");
    }
    s_ = std::min(s_, cap);  // clip float dust from lambda*cap
  }

  std::size_t size() const { return r_.size(); }
  const MassVector& r() const { return r_; }
  const MassVector& c() const { return c_; }
  const CostMatrix& cost() const { return cost_; }
  double s() const { return s_; }
  double epsilon() const { return epsilon_; }
  Regularizer regularizer() const { return regularizer_; }

 private:
  MassVector r_;
  MassVector c_;
  CostMatrix cost_;
  double s_;
  double epsilon_;
  Regularizer regularizer_;
};

// Transport plan plus solve provenance. Entries are kept nonnegative by every
// producer in this library; consumers that require it re-validate.
struct TransportPlan {
  SquareMatrix entries;
  long iterations = 0;
  bool converged = true;

  std::size_t size() const { return entries.n; }
  double total_mass() const { return compensated_total(entries.data); }
};

// One-sided marginal violations plus the mass-equality error; min_entry is
// reported as-is for diagnostics.
struct FeasibilityReport {
  double row_violation = 0.0;  // max_i max(0, (X 1)_i - r_i)
  double col_violation = 0.0;  // max_j max(0, (X^T 1)_j - c_j)
  double mass_error = 0.0;     // |sum X - s|
  double min_entry = 0.0;

  double max_violation() const {
    return std::max({row_violation, col_violation, mass_error});
  }
};

}  // namespace potkit
