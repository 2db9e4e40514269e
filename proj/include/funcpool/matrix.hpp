#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace funcpool {

/// Thrown when operand shapes are incompatible. The message names both shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles. The only tensor type in the project;
/// vertex features, adjacency matrices and layer weights all live here.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  bool all_finite() const;
  std::string shape_str() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// [a | b]; a occupies the left block.
Matrix hconcat(const Matrix& a, const Matrix& b);

/// Columns [begin, end) as a new matrix.
Matrix col_slice(const Matrix& m, std::size_t begin, std::size_t end);

Matrix relu(const Matrix& x);

/// Passes upstream where x > 0, zero elsewhere (subgradient at 0 is 0).
Matrix relu_backward(const Matrix& x, const Matrix& upstream);

Matrix add(const Matrix& a, const Matrix& b);

/// x + bias broadcast over rows.
Matrix add_row_broadcast(const Matrix& x, std::span<const double> bias);

std::vector<double> col_sums(const Matrix& m);

}  // namespace funcpool
