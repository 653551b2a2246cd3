#include "potkit/dense.hpp"

#include <algorithm>
#include <cmath>

namespace potkit {

std::optional<std::vector<double>> solve_dense(std::vector<double> a,
                                               std::vector<double> b,
                                               std::size_t n,
                                               double pivot_tol) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  const double cutoff = pivot_tol * scale;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(a[i * n + k]);
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (best <= cutoff) return std::nullopt;
    if (piv != k) {
      for (std::size_t j = k; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    const double inv = 1.0 / a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] * inv;
      if (f == 0.0) continue;
      a[i * n + k] = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) acc -= a[ii * n + j] * x[j];
    x[ii] = acc / a[ii * n + ii];
  }
  return x;
}

std::optional<std::vector<double>> solve_dense_rank_aware(std::vector<double> a,
                                                          std::vector<double> b,
                                                          std::size_t n,
                                                          double pivot_tol,
                                                          double consistency_tol) {
  double scale = 0.0;
  double rhs_scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  for (double v : b) rhs_scale = std::max(rhs_scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  const double cutoff = pivot_tol * scale;

  // pivot_row[k] = row eliminated with column k, or npos for a free column.
  constexpr auto npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pivot_row(n, npos);
  std::vector<bool> row_used(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = npos;
    double best = cutoff;
    for (std::size_t i = 0; i < n; ++i) {
      if (row_used[i]) continue;
      const double cand = std::abs(a[i * n + k]);
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (piv == npos) continue;  // free column: variable fixed to 0
    pivot_row[k] = piv;
    row_used[piv] = true;
    const double inv = 1.0 / a[piv * n + k];
    for (std::size_t i = 0; i < n; ++i) {
      if (row_used[i] || a[i * n + k] == 0.0) continue;
      const double f = a[i * n + k] * inv;
      a[i * n + k] = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[piv * n + j];
      b[i] -= f * b[piv];
    }
  }
  // Unused rows hold the residual of dependent equations; reject when they
  // are inconsistent with the eliminated ones.
  const double rhs_cut = consistency_tol * std::max(1.0, rhs_scale);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_used[i] && std::abs(b[i]) > rhs_cut) return std::nullopt;
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t piv = pivot_row[k];
    if (piv == npos) continue;
    double acc = b[piv];
    for (std::size_t j = k + 1; j < n; ++j) acc -= a[piv * n + j] * x[j];
    x[k] = acc / a[piv * n + k];
  }
  return x;
}

}  // namespace potkit
