#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "namo/rng.hpp"

namespace namo {

// The five inequality checks, plus two witnesses showing the SNR bound is
// attained and the trace bound is an equality at D = I.
enum class LemmaId {
  Snr,
  PhiEps,
  SeriesMut,
  SeriesMutSqrt,
  TraceOd,
  SnrTightness,
  TraceOdDuality,
};

std::string_view to_string(LemmaId id);

struct LemmaReport {
  LemmaId lemma_id;
  std::size_t trials = 0;
  // max over trials of (lhs − rhs) for "lhs <= rhs" checks, or |lhs − rhs|
  // for equality witnesses. Positive values beyond `tolerance` are failures.
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::string worst_case_inputs;

  bool passed() const noexcept { return max_violation <= tolerance; }
};

inline constexpr double kAnalyticTolerance = 1e-12;
inline constexpr double kSvdTolerance = 1e-9;

struct MomentPair {
  double mu1;
  double mu2;
};

// Default (μ₁, μ₂) grid; every pair has μ₁ <= μ₂.
std::vector<MomentPair> default_snr_grid();

// Test hook: `bound_shift` is subtracted from the SNR bound, so a positive
// shift simulates a broken formula.
struct SnrCheckOptions {
  std::vector<MomentPair> grid = default_snr_grid();
  double bound_shift = 0.0;
};

// ‖m̂_t‖/√v̂_t <= √((1−μ₁)/(1−μ₂)) over random vector streams (ε = 0).
LemmaReport check_snr_bound(std::size_t trials, std::size_t dims_max, std::size_t t_max, Rng rng,
                            const SnrCheckOptions& options = {});

// Constant streams with μ₁ = μ₂ must attain the bound (which is 1).
// `bound_shift` is the same test hook as in SnrCheckOptions.
LemmaReport check_snr_tightness(const std::vector<double>& mus, std::size_t t_max, Rng rng,
                                double bound_shift = 0.0);

// The SNR ratio of a single stream with ε = 0; exposed for tests.
double snr_ratio(const std::vector<std::vector<double>>& stream, double mu1, double mu2);

// x <= φ_ε(x) + √(ε φ_ε(x)), φ_ε(x) = x²/(x + ε).
LemmaReport check_phi_eps(const std::vector<double>& eps_grid, const std::vector<double>& x_grid);
double phi_eps(double x, double eps);

// Σ_{t=1}^T 1/(1−μᵗ) <= T + μ/(1−μ) − ln((1−μᵀ)/(1−μ))/ln μ.
LemmaReport check_series_mut(const std::vector<double>& mu_grid,
                             const std::vector<std::size_t>& t_grid);
// Evaluated in extended precision so the T = 1 equality case is resolvable.
std::pair<long double, long double> series_mut_sides(double mu, std::size_t t);

// Σ_{t=1}^T 1/√(1−μᵗ) <= T − 2 ln(1 + √(1−μᵀ))/ln μ.
LemmaReport check_series_mutsqrt(const std::vector<double>& mu_grid,
                                 const std::vector<std::size_t>& t_grid);
std::pair<long double, long double> series_mutsqrt_sides(double mu, std::size_t t);

// ⟨M, Orth(M)·D⟩ >= min_j D_jj · ‖M‖_* for random full-rank M and D >= 0.
LemmaReport check_trace_inequality(std::size_t trials, std::size_t rows_max, std::size_t cols_max,
                                   Rng rng);
// |⟨M, Orth(M)⟩ − ‖M‖_*| over random full-rank M.
LemmaReport check_trace_duality(std::size_t trials, std::size_t rows_max, std::size_t cols_max,
                                Rng rng);

std::vector<double> default_phi_x_grid();
std::vector<double> default_phi_eps_grid();
std::vector<double> default_series_mu_grid();
std::vector<std::size_t> default_series_t_grid();

struct LemmaSuiteOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 20240601;
  double snr_bound_shift = 0.0;
};

// Runs every check on the default grids, in LemmaId order.
std::vector<LemmaReport> run_lemma_suite(const LemmaSuiteOptions& options = {});

// Least-squares slope of log(y) against log(T). Needs >= 3 distinct T and
// positive y.
double estimate_rate_slope(const std::vector<std::pair<double, double>>& records);

}  // namespace namo
