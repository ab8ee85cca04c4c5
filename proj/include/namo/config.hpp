#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "namo/optimizers.hpp"
#include "namo/problems.hpp"

namespace namo {

struct ProblemConfig {
  std::string name = "matrix_least_squares";
  std::vector<std::size_t> dims;  // empty selects the problem's defaults
  std::size_t dataset_size = 0;   // mlp only; 0 selects the default
  std::uint64_t seed = 1;
};

struct RunConfig {
  ProblemConfig problem;
  OptimizerKind optimizer = OptimizerKind::Namo;
  HyperParams hp;           // rule for matrix-routed parameters
  HyperParams fallback_hp;  // AdamW rule for vectors and scalars
  NoiseModel noise;
  std::size_t steps = 1000;
  std::optional<std::size_t> warmup_steps;  // unset: max(1, steps / 20), capped below steps
  std::size_t log_every = 1;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;

  void validate() const;
  std::size_t effective_warmup() const;
};

// Library defaults for the harness: μ₁ = 0.95, μ₂ = 0.99, λ = 0.01 for the
// orthogonalized rules; β₁ = 0.9, β₂ = 0.95, λ = 0.01 for AdamW.
HyperParams default_hyperparams(OptimizerKind kind);
RunConfig default_run_config(OptimizerKind kind = OptimizerKind::Namo);

// Section -> key -> value. Keys are unique within a section.
using IniDocument = std::map<std::string, std::map<std::string, std::string>>;

// '#' and ';' start comments; blank lines are ignored. Throws
// ErrorCode::Config with a line number on malformed input.
IniDocument parse_ini(const std::string& text);

// Builds a validated RunConfig; unknown sections or keys are errors.
RunConfig run_config_from_ini(const IniDocument& doc);
RunConfig load_run_config(const std::string& path);

// Fully resolved, sorted key=value listing of every field. Two configs with
// equal canonical forms run identically.
std::string canonical_form(const RunConfig& config);

// Seed for the gradient-noise streams of one repeat, derived from the run
// seed and the canonical problem and noise settings (not the optimizer, so
// sweeps over η share noise realizations).
std::uint64_t derive_noise_seed(const RunConfig& config, std::size_t repeat);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace namo
