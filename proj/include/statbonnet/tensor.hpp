#pragma once

// Small helpers for per-point tensor algebra on Field components.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "statbonnet/grid.hpp"

namespace statbonnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t idx2(int n, int i, int j) { return static_cast<std::size_t>(i * n + j); }
constexpr std::size_t idx3(int n, int i, int j, int k) { return static_cast<std::size_t>((i * n + j) * n + k); }
constexpr std::size_t idx4(int n, int i, int j, int k, int l) {
  return static_cast<std::size_t>(((i * n + j) * n + k) * n + l);
}

/// Copies a row-major rows x cols block of components into a matrix.
inline Matrix to_matrix(std::span<const double> values, int rows, int cols, std::size_t offset = 0) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = values[offset + static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline void from_matrix(const Matrix& m, std::span<double> out, std::size_t offset = 0) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[offset + static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
}

/// partial(field, a) for every axis a of the chart.
std::vector<Field> gradients(const Field& field);

/// Requires `field` to carry value shape `shape` on `chart`.
void require_shape(const Field& field, const Chart& chart, const std::vector<int>& shape, const char* what);

}  // namespace statbonnet
