#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfa {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> init);

  static Matrix identity(std::size_t n);
  static Matrix constant(std::size_t rows, std::size_t cols, double v);
  static Matrix column(const std::vector<double>& v);
  static Matrix row(const std::vector<double>& v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);
  std::vector<double> col(std::size_t c) const;

  double max_abs() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// Matrix product; dispatches to the OpenMP kernel for large operands.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);
Matrix matmul_parallel(const Matrix& a, const Matrix& b);

Matrix vstack(const Matrix& top, const Matrix& bottom);
Matrix hstack(const Matrix& left, const Matrix& right);
Matrix block_diag(const Matrix& a, const Matrix& b);

Matrix relu_apply(const Matrix& x);
Matrix softmax_columns(const Matrix& x);
std::vector<double> softmax(const std::vector<double>& v);
double frobenius_norm(const Matrix& x);
double max_abs_diff(const Matrix& a, const Matrix& b);

void require_shape(bool ok, const std::string& what);

}  // namespace tfa
