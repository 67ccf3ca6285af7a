#pragma once
// Dense row-major double matrix; the only container the numeric kernels use.

#include <cstddef>
#include <span>
#include <vector>

namespace pica {

using Vec = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  std::span<const double> row_span(std::size_t i) const {
    return {row(i), cols};
  }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool empty() const { return rows == 0 || cols == 0; }

  void set_row(std::size_t i, std::span<const double> v) {
    double* dst = row(i);
    for (std::size_t j = 0; j < cols; ++j) dst[j] = v[j];
  }
};

}  // namespace pica
