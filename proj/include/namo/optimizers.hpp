#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "namo/linalg.hpp"
#include "namo/orthogonalize.hpp"

namespace namo {

enum class OptimizerKind { Namo, NamoD, Muon, AdamW };

std::string_view to_string(OptimizerKind kind);
// Accepts "namo", "namo_d", "muon", "adamw"; throws ErrorCode::Config otherwise.
OptimizerKind parse_optimizer_kind(std::string_view name);

// mu1/mu2 double as AdamW's beta1/beta2. clamp_c is read by NAMO-D only.
struct HyperParams {
  double eta = 1e-3;
  double mu1 = 0.95;
  double mu2 = 0.99;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double clamp_c = 0.1;
  OrthConfig orth{};

  // Requires 0 <= mu1 <= mu2 < 1, eta > 0, epsilon > 0, c in (0, 1], λ >= 0.
  void validate() const;
};

struct NamoState {
  Matrix m;
  double v = 0.0;
  std::uint64_t t = 0;  // steps completed

  static NamoState zeros(std::size_t rows, std::size_t cols);
};

struct NamoDState {
  Matrix m;
  std::vector<double> v;  // one entry per column
  std::uint64_t t = 0;

  static NamoDState zeros(std::size_t rows, std::size_t cols);
};

struct MuonState {
  Matrix m;
  std::uint64_t t = 0;

  static MuonState zeros(std::size_t rows, std::size_t cols);
};

struct AdamWState {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;

  static AdamWState zeros(std::size_t rows, std::size_t cols);
};

struct StepDiagnostics {
  std::optional<double> alpha;
  std::optional<std::vector<double>> d_raw;
  std::optional<std::vector<double>> d_clamped;
  std::optional<double> d_bar;
  double update_frobenius = 0.0;
};

template <class State>
struct StepResult {
  Matrix theta;
  State state;
  StepDiagnostics diagnostics;
};

// (√(1−μ₂ᵗ)/(1−μ₁ᵗ)) · ‖M‖_F / (√v + ε). Requires t >= 1.
double compute_alpha(const Matrix& m, double v, std::uint64_t t, const HyperParams& hp);

// Upper bound on alpha and on every pre-clamp NAMO-D entry: √((1−μ₁)/(1−μ₂)).
double adaptive_stepsize_bound(double mu1, double mu2);

// Entrywise min(max(d_j, c·d̄), d̄/c) with d̄ the mean of d.
std::vector<double> clamp_d(std::span<const double> d, double c);

StepResult<NamoState> namo_step(const Matrix& theta, const Matrix& grad, const NamoState& state,
                                const HyperParams& hp);
StepResult<NamoDState> namo_d_step(const Matrix& theta, const Matrix& grad,
                                   const NamoDState& state, const HyperParams& hp);
StepResult<MuonState> muon_step(const Matrix& theta, const Matrix& grad, const MuonState& state,
                                const HyperParams& hp);
StepResult<AdamWState> adamw_step(const Matrix& theta, const Matrix& grad,
                                  const AdamWState& state, const HyperParams& hp);

enum class ParamRule { MatrixRule, FallbackRule };

// Shapes with at least two dimensions, all greater than one, get the matrix
// optimizer; everything else (scalars, vectors, 1 x n) falls back to AdamW.
ParamRule route_parameter(std::span<const std::size_t> dims);

// Owns the state of a single parameter under one fixed rule.
class ParameterOptimizer {
 public:
  ParameterOptimizer(OptimizerKind kind, std::size_t rows, std::size_t cols);

  OptimizerKind kind() const noexcept { return kind_; }
  std::uint64_t steps_completed() const noexcept;

  // Advances the state and overwrites `theta`. On error neither is modified.
  StepDiagnostics step(Matrix& theta, const Matrix& grad, const HyperParams& hp);

 private:
  OptimizerKind kind_;
  std::variant<NamoState, NamoDState, MuonState, AdamWState> state_;
};

// The hybrid scheme used for whole models: matrix-routed parameters use the
// chosen optimizer, the rest use AdamW with their own hyperparameters.
class HybridOptimizer {
 public:
  HybridOptimizer(OptimizerKind matrix_kind, HyperParams matrix_hp, HyperParams fallback_hp,
                  const std::vector<std::vector<std::size_t>>& param_dims,
                  const std::vector<Matrix>& params);

  // `lr_scale` multiplies both learning rates (warmup).
  std::vector<StepDiagnostics> step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                                    double lr_scale = 1.0);

  const std::vector<ParamRule>& rules() const noexcept { return rules_; }

 private:
  HyperParams matrix_hp_;
  HyperParams fallback_hp_;
  std::vector<ParamRule> rules_;
  std::vector<ParameterOptimizer> slots_;
};

}  // namespace namo
