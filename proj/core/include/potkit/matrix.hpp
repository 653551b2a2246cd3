#pragma once

#include <cstddef>
#include <vector>

#include "potkit/errors.hpp"

namespace potkit {

// Dense square matrix, row-major. All transport problems in this toolkit are
// n-by-n, so a dedicated square type keeps shape checks trivial.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;  // n*n, row-major

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size, double fill = 0.0)
      : n(size), data(size * size, fill) {}
  SquareMatrix(std::size_t size, std::vector<double> values)
      : n(size), data(std::move(values)) {
    if (data.size() != n * n) throw ShapeError("SquareMatrix: data size != n*n");
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }

  const double* row(std::size_t i) const { return data.data() + i * n; }
  double* row(std::size_t i) { return data.data() + i * n; }
};

}  // namespace potkit
