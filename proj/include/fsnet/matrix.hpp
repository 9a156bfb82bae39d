#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fsnet {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::vector<double> column_copy(std::size_t c) const;
  Matrix transposed() const;
  bool all_finite() const;
  std::string shape_string() const;

  void fill(double v);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Numerically stable softmax (max-subtracted). Throws on empty input.
std::vector<double> softmax(std::span<const double> v);

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

}  // namespace fsnet
