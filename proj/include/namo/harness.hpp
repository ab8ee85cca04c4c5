#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "namo/config.hpp"
#include "namo/optimizers.hpp"
#include "namo/problems.hpp"
#include "namo/verification.hpp"

namespace namo {

struct ParamDiagnostics {
  std::optional<double> alpha;
  std::optional<double> d_bar;
  std::optional<double> d_min;  // of the clamped diagonal D_t
  std::optional<double> d_max;
  std::optional<double> d_raw_max;  // largest pre-clamp entry
};

struct RunRecord {
  std::size_t step = 0;
  double loss = 0.0;          // ℒ(Θ_t)
  double grad_fro = 0.0;      // ‖∇ℒ(Θ_{t-1})‖_F over all parameters
  double avg_grad_fro = 0.0;  // (1/t) Σ_{τ<=t} ‖∇ℒ(Θ_{τ-1})‖_F
  double eta = 0.0;           // effective (warmup-scaled) matrix learning rate
  std::vector<ParamDiagnostics> params;  // one per parameter, in problem order
};

enum class RunStatus { Completed, Diverged };

std::string_view to_string(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::Completed;
  std::vector<RunRecord> records;
  std::size_t diverged_at = 0;  // step at which a non-finite value appeared
  std::string message;

  // Summary of the last logged record; NaN when nothing was logged.
  double final_loss() const;
  double final_avg_grad() const;
};

// Effective learning rate multiplier at step t (1-based): t / warmup while
// t < warmup, 1 afterwards.
double warmup_scale(std::size_t t, std::size_t warmup);

RunResult run(const RunConfig& config, std::size_t repeat = 0);
// Same as above on an already constructed problem (must match config.problem).
RunResult run(const RunConfig& config, const Problem& problem, std::size_t repeat = 0);

struct SweepEntry {
  OptimizerKind optimizer = OptimizerKind::Namo;
  double eta = 0.0;
  std::optional<double> c;
  double final_loss = 0.0;
  double final_avg_grad = 0.0;
  RunStatus status = RunStatus::Completed;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::optional<std::size_t> best;  // argmin final_loss over completed runs

  bool all_diverged() const noexcept { return !best.has_value(); }
};

// Default η grid per optimizer and the NAMO-D c grid.
std::vector<double> default_eta_grid(OptimizerKind kind);
std::vector<double> default_c_grid();

// Index of the completed entry with the smallest final loss; ties go to the
// smaller η, then the smaller c. Empty when nothing completed.
std::optional<std::size_t> select_best(const std::vector<SweepEntry>& entries);

// Runs base x grid. When `cs` is nonempty the optimizer must be NAMO-D and
// the (η, c) product grid is swept. Ties in final loss go to the smaller η,
// then the smaller c.
SweepResult lr_sweep(const RunConfig& base, const std::vector<double>& etas,
                     const std::vector<double>& cs = {});

enum class RateRegime { Deterministic, Stochastic };

struct RateExperimentConfig {
  ProblemConfig problem{"matrix_factorization", {16, 4, 16}, 0, 1};
  OptimizerKind optimizer = OptimizerKind::Namo;
  std::vector<std::size_t> horizons{256, 1024, 4096};
  RateRegime regime = RateRegime::Deterministic;
  double eta_multiplier = 1.0;
  double sigma = 1.0;             // stochastic regime only
  std::size_t batch_size = 1;     // stochastic regime only
  double clamp_c = 0.5;
  OrthConfig orth{};
  std::uint64_t seed = 0;
};

struct RateRow {
  std::size_t horizon = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double final_avg_grad = 0.0;
  RunStatus status = RunStatus::Completed;
};

struct RateResult {
  std::vector<RateRow> rows;
  double slope = 0.0;
};

// Hyperparameters for horizon T with unit constants:
//   deterministic: η = κ T^{-1/2}, ε = T^{-1/2}, μ₁ = 0.95, μ₂ = 0.99
//   stochastic:    η = κ T^{-3/4}, ε = T^{-1/2}, 1 − μ₁ = 1 − μ₂ = T^{-1/2}
// Weight decay is zero and there is no warmup.
RunConfig rate_schedule(const RateExperimentConfig& cfg, std::size_t horizon);

RateResult rate_experiment(const RateExperimentConfig& cfg);

struct BatchAdaptConfig {
  ProblemConfig problem{"matrix_least_squares", {}, 0, 1};
  OptimizerKind optimizer = OptimizerKind::Namo;
  std::size_t horizon = 2048;
  double sigma = 1.0;
  std::vector<std::size_t> batch_sizes{1, 16, 256};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double eta_multiplier = 1.0;
  double clamp_c = 0.5;
  OrthConfig orth{};
};

struct BatchRow {
  std::size_t batch_size = 0;
  double sigma = 0.0;
  double mean_final_avg_grad = 0.0;
  double stddev_final_avg_grad = 0.0;
  std::size_t completed_runs = 0;
};

// Stochastic rate schedule at a fixed horizon, additive Gaussian noise,
// one row per batch size averaged over seeds.
std::vector<BatchRow> batch_adaptation_experiment(const BatchAdaptConfig& cfg);

// ---------------------------------------------------------------------------
// CSV output. Floats use 17 significant digits; missing values are empty
// cells; lines end in LF.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_double(double x);
std::string format_optional(const std::optional<double>& x);

CsvTable run_records_table(const std::vector<RunRecord>& records);
CsvTable sweep_table(const SweepResult& result);
CsvTable lemma_table(const std::vector<LemmaReport>& reports);
CsvTable rate_table(const RateResult& result);
CsvTable batch_table(const std::vector<BatchRow>& rows);

std::string to_csv(const CsvTable& table);
// Throws ErrorCode::Io naming the path on failure.
void write_csv(const CsvTable& table, const std::string& path);

// ---------------------------------------------------------------------------
// File-producing entry points behind the CLI. Each creates `out_dir` and
// writes its CSV plus summary.json.

void run_command(const std::string& config_path, const std::string& out_dir);
void sweep_command(const std::string& config_path, const std::vector<double>& etas,
                   const std::vector<double>& cs, const std::string& out_dir);
double rates_command(const RateExperimentConfig& cfg, const std::string& out_dir);
// Returns true when every lemma check passed.
bool verify_lemmas_command(const LemmaSuiteOptions& options, const std::string& out_dir);
void batch_adapt_command(const BatchAdaptConfig& cfg, const std::string& out_dir);

}  // namespace namo
