#include "namo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "namo/error.hpp"

namespace namo {

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix out(rows, cols);
  for (double& x : out.data()) x = stddev * rng.normal();
  return out;
}

// `batch` distinct indices from [0, n) by partial Fisher-Yates, sorted.
std::vector<std::size_t> sample_rows(std::size_t n, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

ParamList Problem::minibatch_grad(const ParamList&, std::size_t, Rng&) const {
  fail(ErrorCode::Config, std::string(name()) + " does not support minibatch noise");
}

std::size_t Problem::parameter_count() const {
  std::size_t total = 0;
  for (const auto& s : params_spec()) total += s.rows() * s.cols();
  return total;
}

std::vector<std::vector<std::size_t>> Problem::param_dims() const {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& s : params_spec()) out.push_back(s.dims);
  return out;
}

void Problem::check_params(const ParamList& params) const {
  const auto& spec = params_spec();
  if (params.size() != spec.size())
    fail(ErrorCode::Dimension, std::string(name()) + ": expected " + std::to_string(spec.size()) +
                                   " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (params[i].rows() != spec[i].rows() || params[i].cols() != spec[i].cols())
      fail(ErrorCode::Dimension, std::string(name()) + ": parameter '" + spec[i].name +
                                     "' has the wrong shape");
  }
}

double total_frobenius_norm(const ParamList& params) {
  double acc = 0.0;
  for (const auto& p : params)
    for (double x : p.data()) acc += x * x;
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Matrix least squares

MatrixLeastSquares::MatrixLeastSquares(Matrix x, Matrix y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.rows()) fail(ErrorCode::Dimension, "X and Y must have the same row count");
  lipschitz_ = spectral_norm(matmul_tn(x_, x_));
  spec_ = {ParamSpec{"theta", {x_.cols(), y_.cols()}}};
}

double MatrixLeastSquares::loss(const ParamList& params) const {
  check_params(params);
  const double r = frobenius_norm(matmul(x_, params[0]) - y_);
  return 0.5 * r * r;
}

ParamList MatrixLeastSquares::grad(const ParamList& params) const {
  check_params(params);
  return {matmul_tn(x_, matmul(x_, params[0]) - y_)};
}

ParamList MatrixLeastSquares::initial_params(std::uint64_t) const {
  return {Matrix(x_.cols(), y_.cols())};
}

ParamList MatrixLeastSquares::minibatch_grad(const ParamList& params, std::size_t batch,
                                             Rng& rng) const {
  check_params(params);
  if (batch < 1) fail(ErrorCode::Config, "batch size must be >= 1");
  const std::size_t k = x_.rows();
  if (batch >= k) return grad(params);

  // Loss is a sum over rows, so the subsample is rescaled by k / b.
  const auto rows = sample_rows(k, batch, rng);
  const Matrix& theta = params[0];
  Matrix g(theta.rows(), theta.cols());
  std::vector<double> resid(y_.cols());
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < y_.cols(); ++j) {
      double acc = -y_(r, j);
      for (std::size_t a = 0; a < x_.cols(); ++a) acc += x_(r, a) * theta(a, j);
      resid[j] = acc;
    }
    for (std::size_t a = 0; a < x_.cols(); ++a)
      for (std::size_t j = 0; j < y_.cols(); ++j) g(a, j) += x_(r, a) * resid[j];
  }
  g *= static_cast<double>(k) / static_cast<double>(batch);
  return {std::move(g)};
}

std::unique_ptr<MatrixLeastSquares> make_matrix_least_squares(std::size_t m, std::size_t n,
                                                              std::size_t k, std::uint64_t seed) {
  if (m == 0 || n == 0 || k == 0) fail(ErrorCode::Config, "least squares dims must be positive");
  Rng rng(seed, 1);
  Matrix x = gaussian_matrix(k, m, 1.0 / std::sqrt(static_cast<double>(k)), rng);
  Matrix y = gaussian_matrix(k, n, 1.0, rng);
  // Keep L = ‖XᵀX‖₂ inside [1, 100].
  const double l = spectral_norm(matmul_tn(x, x));
  if (l < 1.0) x *= 1.0 / std::sqrt(l);
  else if (l > 100.0) x *= std::sqrt(100.0 / l);
  return std::make_unique<MatrixLeastSquares>(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Matrix factorization

MatrixFactorization::MatrixFactorization(Matrix target, std::size_t rank)
    : target_(std::move(target)), rank_(rank) {
  if (rank_ == 0 || rank_ > std::min(target_.rows(), target_.cols()))
    fail(ErrorCode::Config, "factorization rank must lie in [1, min(m, n)]");
  spec_ = {ParamSpec{"A", {target_.rows(), rank_}}, ParamSpec{"B", {rank_, target_.cols()}}};
}

double MatrixFactorization::loss(const ParamList& params) const {
  check_params(params);
  const double r = frobenius_norm(matmul(params[0], params[1]) - target_);
  return 0.5 * r * r;
}

ParamList MatrixFactorization::grad(const ParamList& params) const {
  check_params(params);
  const Matrix resid = matmul(params[0], params[1]) - target_;
  return {matmul_nt(resid, params[1]), matmul_tn(params[0], resid)};
}

ParamList MatrixFactorization::initial_params(std::uint64_t seed) const {
  Rng rng(seed, 2);
  const double s = std::pow(static_cast<double>(rank_), -0.25);
  Matrix a = gaussian_matrix(target_.rows(), rank_, s, rng);
  Matrix b = gaussian_matrix(rank_, target_.cols(), s, rng);
  return {std::move(a), std::move(b)};
}

std::unique_ptr<MatrixFactorization> make_matrix_factorization(std::size_t m, std::size_t r,
                                                               std::size_t n, std::uint64_t seed) {
  if (m == 0 || n == 0 || r == 0) fail(ErrorCode::Config, "factorization dims must be positive");
  if (r > std::min(m, n)) fail(ErrorCode::Config, "factorization rank must not exceed min(m, n)");
  Rng rng(seed, 1);
  // Factor entries with variance r^{-1/2} give target entries of unit variance.
  const double s = std::pow(static_cast<double>(r), -0.25);
  const Matrix a = gaussian_matrix(m, r, s, rng);
  const Matrix b = gaussian_matrix(r, n, s, rng);
  return std::make_unique<MatrixFactorization>(matmul(a, b), r);
}

// ---------------------------------------------------------------------------
// MLP regression

MlpRegression::MlpRegression(std::vector<std::size_t> layer_dims, Matrix inputs, Matrix targets)
    : dims_(std::move(layer_dims)), inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (dims_.size() < 3) fail(ErrorCode::Config, "mlp needs at least two layers");
  for (std::size_t d : dims_)
    if (d == 0) fail(ErrorCode::Config, "mlp layer widths must be positive");
  if (inputs_.cols() != dims_.front() || targets_.cols() != dims_.back() ||
      inputs_.rows() != targets_.rows())
    fail(ErrorCode::Dimension, "mlp dataset does not match layer dims");
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    spec_.push_back(ParamSpec{"W" + std::to_string(l), {dims_[l], dims_[l - 1]}});
    spec_.push_back(ParamSpec{"b" + std::to_string(l), {dims_[l]}});
  }
}

namespace {

struct Forward {
  // activations[l] is batch x dims[l]; activations[0] holds the inputs.
  std::vector<Matrix> activations;
};

Forward forward(const std::vector<std::size_t>& dims, const ParamList& params,
                const Matrix& inputs, const std::vector<std::size_t>& rows) {
  Forward f;
  const std::size_t layers = dims.size() - 1;
  Matrix h(rows.size(), dims[0]);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < dims[0]; ++j) h(i, j) = inputs(rows[i], j);
  f.activations.push_back(h);
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params[2 * l];
    const Matrix& b = params[2 * l + 1];
    Matrix z = matmul_nt(f.activations.back(), w);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) {
        z(i, j) += b(j, 0);
        if (l + 1 < layers) z(i, j) = std::tanh(z(i, j));
      }
    f.activations.push_back(std::move(z));
  }
  return f;
}

}  // namespace

double MlpRegression::loss_on(const ParamList& params, const std::vector<std::size_t>& rows) const {
  check_params(params);
  const Forward f = forward(dims_, params, inputs_, rows);
  const Matrix& out = f.activations.back();
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const double r = out(i, j) - targets_(rows[i], j);
      acc += r * r;
    }
  return 0.5 * acc / static_cast<double>(rows.size());
}

ParamList MlpRegression::grad_on(const ParamList& params,
                                 const std::vector<std::size_t>& rows) const {
  check_params(params);
  const Forward f = forward(dims_, params, inputs_, rows);
  const std::size_t layers = dims_.size() - 1;
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  Matrix delta = f.activations.back();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < delta.cols(); ++j)
      delta(i, j) = (delta(i, j) - targets_(rows[i], j)) * inv_n;

  ParamList grads(params.size());
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& h_prev = f.activations[l];
    grads[2 * l] = matmul_tn(delta, h_prev);
    Matrix gb(dims_[l + 1], 1);
    for (std::size_t i = 0; i < delta.rows(); ++i)
      for (std::size_t j = 0; j < delta.cols(); ++j) gb(j, 0) += delta(i, j);
    grads[2 * l + 1] = std::move(gb);
    if (l == 0) break;
    Matrix back = matmul(delta, params[2 * l]);
    for (std::size_t i = 0; i < back.rows(); ++i)
      for (std::size_t j = 0; j < back.cols(); ++j)
        back(i, j) *= 1.0 - h_prev(i, j) * h_prev(i, j);
    delta = std::move(back);
  }
  return grads;
}

double MlpRegression::loss(const ParamList& params) const {
  return loss_on(params, all_rows(inputs_.rows()));
}

ParamList MlpRegression::grad(const ParamList& params) const {
  return grad_on(params, all_rows(inputs_.rows()));
}

ParamList MlpRegression::minibatch_grad(const ParamList& params, std::size_t batch,
                                        Rng& rng) const {
  if (batch < 1) fail(ErrorCode::Config, "batch size must be >= 1");
  if (batch >= inputs_.rows()) return grad(params);
  return grad_on(params, sample_rows(inputs_.rows(), batch, rng));
}

ParamList MlpRegression::initial_params(std::uint64_t seed) const {
  Rng rng(seed, 2);
  ParamList out;
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    out.push_back(gaussian_matrix(dims_[l], dims_[l - 1],
                                  1.0 / std::sqrt(static_cast<double>(dims_[l - 1])), rng));
    out.push_back(Matrix(dims_[l], 1));
  }
  return out;
}

std::unique_ptr<MlpRegression> make_mlp_problem(const std::vector<std::size_t>& layer_dims,
                                                std::size_t dataset_size, std::uint64_t seed) {
  if (layer_dims.size() < 3) fail(ErrorCode::Config, "mlp needs at least two layers");
  if (dataset_size == 0) fail(ErrorCode::Config, "mlp dataset_size must be positive");
  for (std::size_t d : layer_dims)
    if (d == 0) fail(ErrorCode::Config, "mlp layer widths must be positive");
  Rng rng(seed, 1);
  Matrix inputs = gaussian_matrix(dataset_size, layer_dims.front(), 1.0, rng);

  // Targets come from a random teacher network of the same architecture.
  ParamList teacher;
  for (std::size_t l = 1; l < layer_dims.size(); ++l) {
    teacher.push_back(gaussian_matrix(layer_dims[l], layer_dims[l - 1],
                                      1.0 / std::sqrt(static_cast<double>(layer_dims[l - 1])), rng));
    teacher.push_back(gaussian_matrix(layer_dims[l], 1, 0.1, rng));
  }
  const Forward f = forward(layer_dims, teacher, inputs, all_rows(dataset_size));
  Matrix targets = f.activations.back();
  return std::make_unique<MlpRegression>(layer_dims, std::move(inputs), std::move(targets));
}

std::shared_ptr<const Problem> make_problem(std::string_view name,
                                            const std::vector<std::size_t>& dims,
                                            std::size_t dataset_size, std::uint64_t seed) {
  auto need = [&](std::size_t count) {
    if (dims.size() != count)
      fail(ErrorCode::Config, std::string(name) + " expects " + std::to_string(count) + " dims");
  };
  if (name == "matrix_least_squares") {
    if (dims.empty()) return make_matrix_least_squares(8, 8, 32, seed);
    need(3);
    return make_matrix_least_squares(dims[0], dims[1], dims[2], seed);
  }
  if (name == "matrix_factorization") {
    if (dims.empty()) return make_matrix_factorization(16, 4, 16, seed);
    need(3);
    return make_matrix_factorization(dims[0], dims[1], dims[2], seed);
  }
  if (name == "mlp") {
    const std::size_t n = dataset_size == 0 ? 64 : dataset_size;
    if (dims.empty()) return make_mlp_problem({4, 16, 2}, n, seed);
    return make_mlp_problem(dims, n, seed);
  }
  fail(ErrorCode::Config, "unknown problem '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

ParamList stochastic_grad(const Problem& problem, const ParamList& params, const NoiseModel& noise,
                          Rng& rng) {
  if (noise.batch_size < 1) fail(ErrorCode::Config, "batch size must be >= 1");
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
    fail(ErrorCode::Config, "sigma must be nonnegative");

  if (noise.kind == NoiseKind::Minibatch)
    return problem.minibatch_grad(params, noise.batch_size, rng);

  ParamList g = problem.grad(params);
  add_gaussian_noise(g, problem.parameter_count(), noise, rng);
  return g;
}

void add_gaussian_noise(ParamList& grad, std::size_t parameter_count, const NoiseModel& noise,
                        Rng& rng) {
  if (noise.sigma == 0.0) return;
  const double per_entry =
      noise.sigma / std::sqrt(static_cast<double>(noise.batch_size) *
                              static_cast<double>(parameter_count));
  for (auto& p : grad)
    for (double& x : p.data()) x += per_entry * rng.normal();
}

ParamList finite_difference_grad(const Problem& problem, const ParamList& params, double h) {
  if (!(h > 0.0)) fail(ErrorCode::Precondition, "finite difference step must be positive");
  problem.check_params(params);
  ParamList work = params;
  ParamList out;
  for (std::size_t p = 0; p < work.size(); ++p) {
    Matrix g(work[p].rows(), work[p].cols());
    for (std::size_t k = 0; k < work[p].size(); ++k) {
      const double orig = work[p].data()[k];
      work[p].data()[k] = orig + h;
      const double up = problem.loss(work);
      work[p].data()[k] = orig - h;
      const double down = problem.loss(work);
      work[p].data()[k] = orig;
      g.data()[k] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace namo
