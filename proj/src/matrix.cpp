#include "tfa/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace tfa {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
  rows_ = init.size();
  cols_ = rows_ ? init.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : init) {
    require_shape(r.size() == cols_, "ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::constant(std::size_t rows, std::size_t cols, double v) { return Matrix(rows, cols, v); }

Matrix Matrix::column(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Matrix Matrix::row(const std::vector<double>& v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  require_shape(r0 + nr <= rows_ && c0 + nc <= cols_, "block out of range");
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  require_shape(r0 + b.rows() <= rows_ && c0 + b.cols() <= cols_, "set_block out of range");
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, c);
  return v;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_shape(rows_ == o.rows_ && cols_ == o.cols_, "add: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_shape(rows_ == o.rows_ && cols_ == o.cols_, "sub: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

namespace {

// One output row; shared by both kernels so their results are bitwise equal.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t k_dim = a.cols();
  const std::size_t n = b.cols();
  double* ci = c.data() + i * n;
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aik = a(i, k);
    if (aik == 0.0) continue;
    const double* bk = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
  }
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
  return c;
}

Matrix matmul_parallel(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  const long rows = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.rows() * a.cols() * b.cols() >= (1u << 18)) return matmul_parallel(a, b);
  return matmul_serial(a, b);
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.empty() && top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  require_shape(top.cols() == bottom.cols(), "vstack: column mismatch");
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m.set_block(0, 0, top);
  m.set_block(top.rows(), 0, bottom);
  return m;
}

Matrix hstack(const Matrix& left, const Matrix& right) {
  if (left.cols() == 0) return right;
  if (right.cols() == 0) return left;
  require_shape(left.rows() == right.rows(), "hstack: row mismatch");
  Matrix m(left.rows(), left.cols() + right.cols());
  m.set_block(0, 0, left);
  m.set_block(0, left.cols(), right);
  return m;
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m(a.rows() + b.rows(), a.cols() + b.cols());
  m.set_block(0, 0, a);
  m.set_block(a.rows(), a.cols(), b);
  return m;
}

Matrix relu_apply(const Matrix& x) {
  Matrix y = x;
  double* p = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
  return y;
}

Matrix softmax_columns(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mx = x(0, c);
    for (std::size_t r = 1; r < x.rows(); ++r) mx = std::max(mx, x(r, c));
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      y(r, c) = std::exp(x(r, c) - mx);
      sum += y(r, c);
    }
    for (std::size_t r = 0; r < x.rows(); ++r) y(r, c) /= sum;
  }
  return y;
}

std::vector<double> softmax(const std::vector<double>& v) {
  Matrix s = softmax_columns(Matrix::column(v));
  return s.values();
}

double frobenius_norm(const Matrix& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace tfa
