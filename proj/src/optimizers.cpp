#include "namo/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "namo/error.hpp"

namespace namo {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Namo: return "namo";
    case OptimizerKind::NamoD: return "namo_d";
    case OptimizerKind::Muon: return "muon";
    case OptimizerKind::AdamW: return "adamw";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "namo") return OptimizerKind::Namo;
  if (name == "namo_d" || name == "namo-d") return OptimizerKind::NamoD;
  if (name == "muon") return OptimizerKind::Muon;
  if (name == "adamw") return OptimizerKind::AdamW;
  fail(ErrorCode::Config, "unknown optimizer '" + std::string(name) + "'");
}

void HyperParams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) fail(ErrorCode::Config, "eta must be positive");
  if (!(mu1 >= 0.0 && mu1 < 1.0)) fail(ErrorCode::Config, "mu1 must lie in [0, 1)");
  if (!(mu2 >= 0.0 && mu2 < 1.0)) fail(ErrorCode::Config, "mu2 must lie in [0, 1)");
  if (!(mu1 <= mu2)) fail(ErrorCode::Config, "mu1 must not exceed mu2");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    fail(ErrorCode::Config, "epsilon must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    fail(ErrorCode::Config, "weight_decay must be nonnegative");
  if (!(clamp_c > 0.0 && clamp_c <= 1.0)) fail(ErrorCode::Config, "clamp_c must lie in (0, 1]");
  orth.validate();
}

NamoState NamoState::zeros(std::size_t rows, std::size_t cols) {
  return NamoState{Matrix(rows, cols), 0.0, 0};
}

NamoDState NamoDState::zeros(std::size_t rows, std::size_t cols) {
  return NamoDState{Matrix(rows, cols), std::vector<double>(cols, 0.0), 0};
}

MuonState MuonState::zeros(std::size_t rows, std::size_t cols) {
  return MuonState{Matrix(rows, cols), 0};
}

AdamWState AdamWState::zeros(std::size_t rows, std::size_t cols) {
  return AdamWState{Matrix(rows, cols), Matrix(rows, cols), 0};
}

namespace {

void check_step_inputs(const Matrix& theta, const Matrix& grad, const Matrix& state_m) {
  if (!theta.same_shape(grad)) fail(ErrorCode::Dimension, "gradient shape differs from parameter");
  if (!theta.same_shape(state_m))
    fail(ErrorCode::Dimension, "optimizer state shape differs from parameter");
  if (!grad.all_finite()) fail(ErrorCode::Input, "gradient contains non-finite entries");
}

void check_output(const Matrix& theta) {
  if (!theta.all_finite()) fail(ErrorCode::Numerical, "update produced non-finite parameters");
}

// μ M + (1 − μ) G
Matrix ema(const Matrix& m, const Matrix& g, double mu) {
  Matrix out = m * mu;
  out += g * (1.0 - mu);
  return out;
}

// O + λθ, the direction every orthogonalized rule scales.
Matrix decayed_direction(const Matrix& o, const Matrix& theta, double weight_decay) {
  if (weight_decay == 0.0) return o;
  return o + theta * weight_decay;
}

double bias_factor(double mu1, double mu2, std::uint64_t t) {
  const double td = static_cast<double>(t);
  return std::sqrt(1.0 - std::pow(mu2, td)) / (1.0 - std::pow(mu1, td));
}

}  // namespace

double adaptive_stepsize_bound(double mu1, double mu2) {
  return std::sqrt((1.0 - mu1) / (1.0 - mu2));
}

double compute_alpha(const Matrix& m, double v, std::uint64_t t, const HyperParams& hp) {
  if (t == 0) fail(ErrorCode::Precondition, "compute_alpha requires t >= 1");
  if (!(v >= 0.0)) fail(ErrorCode::Precondition, "compute_alpha requires v >= 0");
  return bias_factor(hp.mu1, hp.mu2, t) * frobenius_norm(m) / (std::sqrt(v) + hp.epsilon);
}

std::vector<double> clamp_d(std::span<const double> d, double c) {
  if (d.empty()) fail(ErrorCode::Precondition, "clamp_d requires a nonempty vector");
  if (!(c > 0.0 && c <= 1.0)) fail(ErrorCode::Precondition, "clamp_d requires c in (0, 1]");
  double sum = 0.0;
  for (double x : d) {
    if (!(x >= 0.0)) fail(ErrorCode::Precondition, "clamp_d requires nonnegative entries");
    sum += x;
  }
  const double mean = sum / static_cast<double>(d.size());
  const double lo = c * mean;
  const double hi = mean / c;
  std::vector<double> out(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) out[j] = std::min(std::max(d[j], lo), hi);
  return out;
}

StepResult<NamoState> namo_step(const Matrix& theta, const Matrix& grad, const NamoState& state,
                                const HyperParams& hp) {
  hp.validate();
  check_step_inputs(theta, grad, state.m);

  NamoState next;
  next.m = ema(state.m, grad, hp.mu1);
  const double g_norm = frobenius_norm(grad);
  next.v = hp.mu2 * state.v + (1.0 - hp.mu2) * g_norm * g_norm;
  next.t = state.t + 1;

  const Matrix o = orthogonalize(next.m, hp.orth);
  const double alpha = compute_alpha(next.m, next.v, next.t, hp);
  const Matrix update = decayed_direction(o, theta, hp.weight_decay) * (hp.eta * alpha);

  StepResult<NamoState> out{theta - update, std::move(next), {}};
  check_output(out.theta);
  out.diagnostics.alpha = alpha;
  out.diagnostics.update_frobenius = frobenius_norm(update);
  return out;
}

StepResult<NamoDState> namo_d_step(const Matrix& theta, const Matrix& grad,
                                   const NamoDState& state, const HyperParams& hp) {
  hp.validate();
  check_step_inputs(theta, grad, state.m);
  if (state.v.size() != theta.cols())
    fail(ErrorCode::Dimension, "NAMO-D second moment length differs from column count");

  const std::size_t n = theta.cols();
  NamoDState next;
  next.m = ema(state.m, grad, hp.mu1);
  next.t = state.t + 1;
  const std::vector<double> g_cols = column_norms(grad);
  next.v.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    next.v[j] = hp.mu2 * state.v[j] + (1.0 - hp.mu2) * g_cols[j] * g_cols[j];

  const double factor = bias_factor(hp.mu1, hp.mu2, next.t);
  const std::vector<double> m_cols = column_norms(next.m);
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j)
    d[j] = factor * m_cols[j] / (std::sqrt(next.v[j]) + hp.epsilon);

  std::vector<double> clamped = clamp_d(d, hp.clamp_c);
  double d_bar = 0.0;
  for (double x : d) d_bar += x;
  d_bar /= static_cast<double>(n);

  const Matrix o = orthogonalize(next.m, hp.orth);
  const Matrix update =
      scale_columns(decayed_direction(o, theta, hp.weight_decay), clamped) * hp.eta;

  StepResult<NamoDState> out{theta - update, std::move(next), {}};
  check_output(out.theta);
  out.diagnostics.d_raw = std::move(d);
  out.diagnostics.d_clamped = std::move(clamped);
  out.diagnostics.d_bar = d_bar;
  out.diagnostics.update_frobenius = frobenius_norm(update);
  return out;
}

StepResult<MuonState> muon_step(const Matrix& theta, const Matrix& grad, const MuonState& state,
                                const HyperParams& hp) {
  hp.validate();
  check_step_inputs(theta, grad, state.m);

  MuonState next{ema(state.m, grad, hp.mu1), state.t + 1};
  const Matrix o = orthogonalize(next.m, hp.orth);
  const Matrix update = decayed_direction(o, theta, hp.weight_decay) * hp.eta;

  StepResult<MuonState> out{theta - update, std::move(next), {}};
  check_output(out.theta);
  out.diagnostics.update_frobenius = frobenius_norm(update);
  return out;
}

StepResult<AdamWState> adamw_step(const Matrix& theta, const Matrix& grad,
                                  const AdamWState& state, const HyperParams& hp) {
  hp.validate();
  check_step_inputs(theta, grad, state.m);
  if (!theta.same_shape(state.v))
    fail(ErrorCode::Dimension, "optimizer state shape differs from parameter");

  AdamWState next{Matrix(theta.rows(), theta.cols()), Matrix(theta.rows(), theta.cols()),
                  state.t + 1};
  const double td = static_cast<double>(next.t);
  const double c1 = 1.0 - std::pow(hp.mu1, td);
  const double c2 = 1.0 - std::pow(hp.mu2, td);

  Matrix update(theta.rows(), theta.cols());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double g = grad.data()[k];
    const double m = hp.mu1 * state.m.data()[k] + (1.0 - hp.mu1) * g;
    const double v = hp.mu2 * state.v.data()[k] + (1.0 - hp.mu2) * g * g;
    next.m.data()[k] = m;
    next.v.data()[k] = v;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    update.data()[k] =
        hp.eta * (m_hat / (std::sqrt(v_hat) + hp.epsilon) + hp.weight_decay * theta.data()[k]);
  }

  StepResult<AdamWState> out{theta - update, std::move(next), {}};
  check_output(out.theta);
  out.diagnostics.update_frobenius = frobenius_norm(update);
  return out;
}

ParamRule route_parameter(std::span<const std::size_t> dims) {
  if (dims.size() < 2) return ParamRule::FallbackRule;
  for (std::size_t d : dims)
    if (d <= 1) return ParamRule::FallbackRule;
  return ParamRule::MatrixRule;
}

ParameterOptimizer::ParameterOptimizer(OptimizerKind kind, std::size_t rows, std::size_t cols)
    : kind_(kind), state_(NamoState{}) {
  switch (kind) {
    case OptimizerKind::Namo: state_ = NamoState::zeros(rows, cols); break;
    case OptimizerKind::NamoD: state_ = NamoDState::zeros(rows, cols); break;
    case OptimizerKind::Muon: state_ = MuonState::zeros(rows, cols); break;
    case OptimizerKind::AdamW: state_ = AdamWState::zeros(rows, cols); break;
  }
}

std::uint64_t ParameterOptimizer::steps_completed() const noexcept {
  return std::visit([](const auto& s) { return s.t; }, state_);
}

StepDiagnostics ParameterOptimizer::step(Matrix& theta, const Matrix& grad, const HyperParams& hp) {
  return std::visit(
      [&](auto& s) {
        using S = std::decay_t<decltype(s)>;
        StepResult<S> r = [&] {
          if constexpr (std::is_same_v<S, NamoState>) return namo_step(theta, grad, s, hp);
          else if constexpr (std::is_same_v<S, NamoDState>) return namo_d_step(theta, grad, s, hp);
          else if constexpr (std::is_same_v<S, MuonState>) return muon_step(theta, grad, s, hp);
          else return adamw_step(theta, grad, s, hp);
        }();
        theta = std::move(r.theta);
        s = std::move(r.state);
        return std::move(r.diagnostics);
      },
      state_);
}

HybridOptimizer::HybridOptimizer(OptimizerKind matrix_kind, HyperParams matrix_hp,
                                 HyperParams fallback_hp,
                                 const std::vector<std::vector<std::size_t>>& param_dims,
                                 const std::vector<Matrix>& params)
    : matrix_hp_(std::move(matrix_hp)), fallback_hp_(std::move(fallback_hp)) {
  if (param_dims.size() != params.size())
    fail(ErrorCode::Dimension, "parameter spec count differs from parameter count");
  matrix_hp_.validate();
  fallback_hp_.validate();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRule rule = route_parameter(param_dims[i]);
    rules_.push_back(rule);
    const OptimizerKind kind = rule == ParamRule::MatrixRule ? matrix_kind : OptimizerKind::AdamW;
    slots_.emplace_back(kind, params[i].rows(), params[i].cols());
  }
}

std::vector<StepDiagnostics> HybridOptimizer::step(std::vector<Matrix>& params,
                                                   const std::vector<Matrix>& grads,
                                                   double lr_scale) {
  if (params.size() != slots_.size() || grads.size() != slots_.size())
    fail(ErrorCode::Dimension, "parameter/gradient count differs from optimizer slots");
  std::vector<StepDiagnostics> diags;
  diags.reserve(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    HyperParams hp = rules_[i] == ParamRule::MatrixRule ? matrix_hp_ : fallback_hp_;
    hp.eta *= lr_scale;
    diags.push_back(slots_[i].step(params[i], grads[i], hp));
  }
  return diags;
}

}  // namespace namo
