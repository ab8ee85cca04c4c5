#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "namo/linalg.hpp"
#include "namo/rng.hpp"

namespace namo {

using ParamList = std::vector<Matrix>;

// Logical shape of a parameter. Vectors ({n}) are stored as n x 1 matrices.
struct ParamSpec {
  std::string name;
  std::vector<std::size_t> dims;

  std::size_t rows() const noexcept { return dims.empty() ? 1 : dims[0]; }
  std::size_t cols() const noexcept { return dims.size() < 2 ? 1 : dims[1]; }
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string_view name() const = 0;
  virtual const std::vector<ParamSpec>& params_spec() const = 0;
  virtual double loss(const ParamList& params) const = 0;
  virtual ParamList grad(const ParamList& params) const = 0;
  virtual std::optional<double> lipschitz_hint() const { return std::nullopt; }
  virtual ParamList initial_params(std::uint64_t seed) const = 0;

  // Number of samples the loss is built from; 0 when the problem has no
  // sample structure and minibatching is unsupported.
  virtual std::size_t dataset_size() const { return 0; }
  // Unbiased gradient from `batch` samples drawn without replacement; the full
  // gradient when batch >= dataset_size().
  virtual ParamList minibatch_grad(const ParamList& params, std::size_t batch, Rng& rng) const;

  std::size_t parameter_count() const;
  std::vector<std::vector<std::size_t>> param_dims() const;
  // Throws ErrorCode::Dimension unless `params` matches params_spec().
  void check_params(const ParamList& params) const;
};

// ½‖XΘ − Y‖_F² with X: k x m, Y: k x n, Θ: m x n.
class MatrixLeastSquares final : public Problem {
 public:
  MatrixLeastSquares(Matrix x, Matrix y);

  std::string_view name() const override { return "matrix_least_squares"; }
  const std::vector<ParamSpec>& params_spec() const override { return spec_; }
  double loss(const ParamList& params) const override;
  ParamList grad(const ParamList& params) const override;
  std::optional<double> lipschitz_hint() const override { return lipschitz_; }
  ParamList initial_params(std::uint64_t seed) const override;
  std::size_t dataset_size() const override { return x_.rows(); }
  ParamList minibatch_grad(const ParamList& params, std::size_t batch, Rng& rng) const override;

  const Matrix& x() const noexcept { return x_; }
  const Matrix& y() const noexcept { return y_; }

 private:
  Matrix x_;
  Matrix y_;
  double lipschitz_;
  std::vector<ParamSpec> spec_;
};

// ½‖AB − C‖_F² over A: m x r, B: r x n.
class MatrixFactorization final : public Problem {
 public:
  explicit MatrixFactorization(Matrix target, std::size_t rank);

  std::string_view name() const override { return "matrix_factorization"; }
  const std::vector<ParamSpec>& params_spec() const override { return spec_; }
  double loss(const ParamList& params) const override;
  ParamList grad(const ParamList& params) const override;
  ParamList initial_params(std::uint64_t seed) const override;

  const Matrix& target() const noexcept { return target_; }

 private:
  Matrix target_;
  std::size_t rank_;
  std::vector<ParamSpec> spec_;
};

// Fully connected tanh network with a linear output layer and loss
// (1/N) Σᵢ ½‖f(xᵢ) − yᵢ‖². Parameters alternate W_l (d_l x d_{l-1}) and b_l (d_l).
class MlpRegression final : public Problem {
 public:
  MlpRegression(std::vector<std::size_t> layer_dims, Matrix inputs, Matrix targets);

  std::string_view name() const override { return "mlp"; }
  const std::vector<ParamSpec>& params_spec() const override { return spec_; }
  double loss(const ParamList& params) const override;
  ParamList grad(const ParamList& params) const override;
  ParamList initial_params(std::uint64_t seed) const override;
  std::size_t dataset_size() const override { return inputs_.rows(); }
  ParamList minibatch_grad(const ParamList& params, std::size_t batch, Rng& rng) const override;

 private:
  double loss_on(const ParamList& params, const std::vector<std::size_t>& rows) const;
  ParamList grad_on(const ParamList& params, const std::vector<std::size_t>& rows) const;

  std::vector<std::size_t> dims_;
  Matrix inputs_;
  Matrix targets_;
  std::vector<ParamSpec> spec_;
};

std::unique_ptr<MatrixLeastSquares> make_matrix_least_squares(std::size_t m, std::size_t n,
                                                              std::size_t k, std::uint64_t seed);
std::unique_ptr<MatrixFactorization> make_matrix_factorization(std::size_t m, std::size_t r,
                                                               std::size_t n, std::uint64_t seed);
std::unique_ptr<MlpRegression> make_mlp_problem(const std::vector<std::size_t>& layer_dims,
                                                std::size_t dataset_size, std::uint64_t seed);

// Named construction used by the harness. Empty `dims` selects the defaults:
// matrix_least_squares {8, 8, 32}, matrix_factorization {16, 4, 16}, mlp {4, 16, 2}.
std::shared_ptr<const Problem> make_problem(std::string_view name,
                                            const std::vector<std::size_t>& dims,
                                            std::size_t dataset_size, std::uint64_t seed);

enum class NoiseKind { AdditiveGaussian, Minibatch };

struct NoiseModel {
  NoiseKind kind = NoiseKind::AdditiveGaussian;
  double sigma = 0.0;
  std::size_t batch_size = 1;
};

// AdditiveGaussian: ∇ℒ + Z with Z iid N(0, σ²/(b·P)), P the total parameter
// count, so E‖Z‖_F² = σ²/b. Minibatch: problem.minibatch_grad(b).
ParamList stochastic_grad(const Problem& problem, const ParamList& params, const NoiseModel& noise,
                          Rng& rng);

// Adds the AdditiveGaussian perturbation to an exact gradient in place;
// draws in parameter order, row-major. No draws are made when σ = 0.
void add_gaussian_noise(ParamList& grad, std::size_t parameter_count, const NoiseModel& noise,
                        Rng& rng);

// Central differences (ℒ(θ + h e) − ℒ(θ − h e)) / 2h per coordinate.
ParamList finite_difference_grad(const Problem& problem, const ParamList& params, double h);

// Frobenius norm of the concatenation of all parameters.
double total_frobenius_norm(const ParamList& params);

}  // namespace namo
