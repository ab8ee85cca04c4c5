#include "namo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "namo/error.hpp"

namespace namo {

namespace {

void require_shape(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    fail(ErrorCode::Dimension, "matrix dimensions must be positive, got " +
                                   std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::Dimension, std::string(op) + ": shape mismatch " +
                                   std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                   " vs " + std::to_string(b.rows()) + "x" +
                                   std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  require_shape(rows, cols);
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_shape(rows, cols);
  if (data_.size() != rows * cols) {
    fail(ErrorCode::Dimension, "matrix data length " + std::to_string(data_.size()) +
                                   " does not match " + std::to_string(rows) + "x" +
                                   std::to_string(cols));
  }
  if (!all_finite()) fail(ErrorCode::Input, "matrix data contains non-finite entries");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix out(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) out(i, i) = diag[i];
  if (!out.all_finite()) fail(ErrorCode::Input, "diagonal contains non-finite entries");
  return out;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) fail(ErrorCode::Dimension, "ragged row list");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
  require_same_shape(*this, rhs, "add");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
  require_same_shape(*this, rhs, "subtract");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
Matrix operator*(Matrix lhs, double s) { return lhs *= s; }
Matrix operator*(double s, Matrix rhs) { return rhs *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorCode::Dimension, "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail(ErrorCode::Dimension, "matmul_tn: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::Dimension, "matmul_nt: column counts differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix scale_columns(const Matrix& a, std::span<const double> d) {
  if (d.size() != a.cols()) fail(ErrorCode::Dimension, "scale_columns: length mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) *= d[j];
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  return worst;
}

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (double x : m.data()) acc += x * x;
  return std::sqrt(acc);
}

std::vector<double> column_norms(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j) * m(i, j);
  for (double& x : out) x = std::sqrt(x);
  return out;
}

double inner_product(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner_product");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a.data()[k] * b.data()[k];
  return acc;
}

namespace {

// One-sided Jacobi on a tall matrix (m >= n). Columns are kept contiguous by
// working on the transpose: row j of `w` is column j of the input.
SvdFactors jacobi_tall(const Matrix& a, const SvdOptions& options) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix w = a.transposed();       // n x m
  Matrix vt = Matrix::identity(n); // row j = column j of V

  auto dot_rows = [](const Matrix& x, std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) acc += x(p, k) * x(q, k);
    return acc;
  };
  auto rotate_rows = [](Matrix& x, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double xp = x(p, k);
      const double xq = x(q, k);
      x(p, k) = c * xp - s * xq;
      x(q, k) = s * xp + c * xq;
    }
  };

  bool converged = n < 2;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot_rows(w, p, p);
        const double beta = dot_rows(w, q, q);
        const double gamma = dot_rows(w, p, q);
        if (gamma == 0.0 || std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate_rows(w, p, q, c, s);
        rotate_rows(vt, p, q, c, s);
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    fail(ErrorCode::Numerical, "reduced_svd: Jacobi sweeps did not converge within " +
                                   std::to_string(options.max_sweeps) + " sweeps");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot_rows(w, j, j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdFactors out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vt(j, i);
    if (sigma[j] > 0.0) {
      bool ok = true;
      for (std::size_t i = 0; i < m; ++i) {
        out.u(i, k) = w(j, i) / sigma[j];
        ok = ok && std::isfinite(out.u(i, k));
      }
      filled[k] = ok;
    }
  }

  // Complete U for exactly-zero singular values with unit vectors
  // orthogonalized against the columns already present.
  for (std::size_t k = 0; k < n; ++k) {
    if (filled[k]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < m; ++e) {
      std::vector<double> cand(m, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < n; ++c) {
          if (!filled[c]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += out.u(i, c) * cand[i];
          for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * out.u(i, c);
        }
      }
      double nrm = 0.0;
      for (double x : cand) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > best_norm) {
        best_norm = nrm;
        best = std::move(cand);
      }
    }
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = best[i] / best_norm;
    out.singular_values[k] = 0.0;
    filled[k] = true;
  }

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (std::abs(out.u(i, k)) > std::abs(out.u(arg, k))) arg = i;
    if (out.u(arg, k) < 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = -out.u(i, k);
      for (std::size_t i = 0; i < n; ++i) out.v(i, k) = -out.v(i, k);
    }
  }
  return out;
}

}  // namespace

SvdFactors reduced_svd(const Matrix& m, const SvdOptions& options) {
  if (m.empty()) fail(ErrorCode::Dimension, "reduced_svd: empty matrix");
  if (m.rows() >= m.cols()) return jacobi_tall(m, options);

  // Wide input: factor the transpose and swap roles, then re-apply the sign
  // convention on the new U.
  SvdFactors t = jacobi_tall(m.transposed(), options);
  SvdFactors out{std::move(t.v), std::move(t.singular_values), std::move(t.u)};
  for (std::size_t k = 0; k < out.u.cols(); ++k) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < out.u.rows(); ++i)
      if (std::abs(out.u(i, k)) > std::abs(out.u(arg, k))) arg = i;
    if (out.u(arg, k) < 0.0) {
      for (std::size_t i = 0; i < out.u.rows(); ++i) out.u(i, k) = -out.u(i, k);
      for (std::size_t i = 0; i < out.v.rows(); ++i) out.v(i, k) = -out.v(i, k);
    }
  }
  return out;
}

double spectral_norm(const Matrix& m) { return reduced_svd(m).singular_values.front(); }

double nuclear_norm(const Matrix& m) {
  const auto sv = reduced_svd(m).singular_values;
  double acc = 0.0;
  for (double s : sv) acc += s;
  return acc;
}

}  // namespace namo
