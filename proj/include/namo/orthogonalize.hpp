#pragma once

#include <array>

#include "namo/linalg.hpp"

namespace namo {

enum class OrthMethod { Exact, NewtonSchulz };

struct OrthConfig {
  OrthMethod method = OrthMethod::Exact;
  int ns_iterations = 5;
  // X <- a X + b (X Xᵀ) X + c (X Xᵀ)² X
  std::array<double, 3> ns_coefficients{3.4445, -4.7750, 2.0315};
  // Exact mode drops singular triples with sigma <= rank_tolerance * sigma_max.
  double rank_tolerance = 1e-12;
  // Inputs with Frobenius norm at or below this map to the zero matrix.
  double zero_threshold = 1e-30;

  void validate() const;
};

// Added to the Frobenius norm before Newton-Schulz pre-normalization.
inline constexpr double kNewtonSchulzNormFloor = 1e-12;

// Orth(M) = U Vᵀ over the retained singular triples (Exact) or the quintic
// Newton-Schulz approximation of it. Output has the shape of `m`.
Matrix orthogonalize(const Matrix& m, const OrthConfig& cfg = {});

// ‖OᵀO − I‖_F using the Gram matrix of the smaller dimension.
double orthogonality_defect(const Matrix& o);

// One application of the quintic Newton-Schulz polynomial to a scalar; the
// matrix iteration acts on each singular value this way.
double newton_schulz_scalar(double x, const std::array<double, 3>& coefficients);

}  // namespace namo
