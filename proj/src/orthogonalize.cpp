#include "namo/orthogonalize.hpp"

#include <cmath>

#include "namo/error.hpp"

namespace namo {

void OrthConfig::validate() const {
  if (ns_iterations < 1) fail(ErrorCode::Config, "ns_iterations must be >= 1");
  if (!(rank_tolerance >= 0.0 && rank_tolerance < 1.0))
    fail(ErrorCode::Config, "rank_tolerance must lie in [0, 1)");
  if (!(zero_threshold >= 0.0) || !std::isfinite(zero_threshold))
    fail(ErrorCode::Config, "zero_threshold must be nonnegative");
  for (double c : ns_coefficients)
    if (!std::isfinite(c)) fail(ErrorCode::Config, "ns_coefficients must be finite");
}

double newton_schulz_scalar(double x, const std::array<double, 3>& k) {
  const double x2 = x * x;
  return k[0] * x + k[1] * x2 * x + k[2] * x2 * x2 * x;
}

namespace {

Matrix exact_orth(const Matrix& m, double rank_tolerance) {
  const SvdFactors f = reduced_svd(m);
  const double cutoff = rank_tolerance * f.singular_values.front();
  Matrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < f.singular_values.size(); ++k) {
    if (!(f.singular_values[k] > cutoff)) break;  // sorted nonincreasing
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double uik = f.u(i, k);
      for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) += uik * f.v(j, k);
    }
  }
  return out;
}

// Expects a wide (rows <= cols) input so X Xᵀ is the small Gram matrix.
Matrix newton_schulz_wide(Matrix x, const OrthConfig& cfg) {
  const auto& [a, b, c] = cfg.ns_coefficients;
  for (int it = 0; it < cfg.ns_iterations; ++it) {
    const Matrix gram = matmul_nt(x, x);
    Matrix poly = gram * b;
    poly += matmul(gram, gram) * c;
    Matrix next = x * a;
    next += matmul(poly, x);
    x = std::move(next);
  }
  return x;
}

}  // namespace

Matrix orthogonalize(const Matrix& m, const OrthConfig& cfg) {
  cfg.validate();
  const double norm = frobenius_norm(m);
  if (norm <= cfg.zero_threshold) return Matrix(m.rows(), m.cols());

  if (cfg.method == OrthMethod::Exact) return exact_orth(m, cfg.rank_tolerance);

  const double scale = 1.0 / (norm + kNewtonSchulzNormFloor);
  if (m.rows() > m.cols()) return newton_schulz_wide(m.transposed() * scale, cfg).transposed();
  return newton_schulz_wide(m * scale, cfg);
}

double orthogonality_defect(const Matrix& o) {
  const Matrix gram = o.rows() >= o.cols() ? matmul_tn(o, o) : matmul_nt(o, o);
  return frobenius_norm(gram - Matrix::identity(gram.rows()));
}

}  // namespace namo
