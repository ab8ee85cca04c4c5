#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace namo {

// Dense row-major real matrix. Construction rejects empty shapes and
// non-finite entries; arithmetic helpers below do not re-validate.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  // Row-list literal, mostly for tests: from_rows({{1, 2}, {3, 4}}).
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& rhs);
  Matrix& operator-=(const Matrix& rhs);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator*(Matrix lhs, double s);
Matrix operator*(double s, Matrix rhs);

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// a·diag(d)
Matrix scale_columns(const Matrix& a, std::span<const double> d);

// Largest absolute entrywise difference; shapes must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);
std::vector<double> column_norms(const Matrix& m);
double inner_product(const Matrix& a, const Matrix& b);

struct SvdFactors {
  Matrix u;                            // m x r, orthonormal columns
  std::vector<double> singular_values; // length r, nonincreasing
  Matrix v;                            // n x r, orthonormal columns
};

struct SvdOptions {
  int max_sweeps = 80;
  double tolerance = 1e-15;
};

// Reduced SVD by one-sided Jacobi rotations, r = min(m, n). Each column of U
// has its largest-magnitude entry made nonnegative. Throws
// ErrorCode::Numerical if the sweeps do not converge.
SvdFactors reduced_svd(const Matrix& m, const SvdOptions& options = {});

double spectral_norm(const Matrix& m);
double nuclear_norm(const Matrix& m);

}  // namespace namo
