#include "namo/verification.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "namo/error.hpp"
#include "namo/linalg.hpp"
#include "namo/optimizers.hpp"
#include "namo/orthogonalize.hpp"

namespace namo {

std::string_view to_string(LemmaId id) {
  switch (id) {
    case LemmaId::Snr: return "SNR";
    case LemmaId::PhiEps: return "PHI_EPS";
    case LemmaId::SeriesMut: return "SERIES_MUT";
    case LemmaId::SeriesMutSqrt: return "SERIES_MUTSQRT";
    case LemmaId::TraceOd: return "TRACE_OD";
    case LemmaId::SnrTightness: return "SNR_TIGHTNESS";
    case LemmaId::TraceOdDuality: return "TRACE_OD_DUALITY";
  }
  return "UNKNOWN";
}

namespace {

std::vector<double> logspace(double lo_exp, double hi_exp, int per_decade) {
  std::vector<double> out;
  const int steps = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
  for (int i = 0; i <= steps; ++i)
    out.push_back(std::pow(10.0, lo_exp + static_cast<double>(i) / per_decade));
  return out;
}

// Records the worst trial; `describe` is only invoked when the trial wins.
template <class Describe>
void track(LemmaReport& report, double violation, Describe&& describe) {
  if (report.trials == 0 || violation > report.max_violation) {
    report.max_violation = violation;
    report.worst_case_inputs = describe();
  }
  ++report.trials;
}

}  // namespace

std::vector<MomentPair> default_snr_grid() {
  return {{0.9, 0.9}, {0.9, 0.99}, {0.95, 0.99}, {0.5, 0.9}, {0.0, 0.5}, {0.99, 0.999}};
}

double snr_ratio(const std::vector<std::vector<double>>& stream, double mu1, double mu2) {
  if (stream.empty()) fail(ErrorCode::Precondition, "snr_ratio needs at least one step");
  const std::size_t d = stream.front().size();
  std::vector<double> m(d, 0.0);
  double v = 0.0;
  for (const auto& g : stream) {
    if (g.size() != d) fail(ErrorCode::Dimension, "snr_ratio: ragged stream");
    double g2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      m[i] = mu1 * m[i] + (1.0 - mu1) * g[i];
      g2 += g[i] * g[i];
    }
    v = mu2 * v + (1.0 - mu2) * g2;
  }
  const double t = static_cast<double>(stream.size());
  double m2 = 0.0;
  for (double x : m) m2 += x * x;
  const double m_hat = std::sqrt(m2) / (1.0 - std::pow(mu1, t));
  const double v_hat = v / (1.0 - std::pow(mu2, t));
  if (v_hat == 0.0) return 0.0;
  return m_hat / std::sqrt(v_hat);
}

LemmaReport check_snr_bound(std::size_t trials, std::size_t dims_max, std::size_t t_max, Rng rng,
                            const SnrCheckOptions& options) {
  if (trials == 0 || dims_max == 0 || t_max == 0 || options.grid.empty())
    fail(ErrorCode::Precondition, "check_snr_bound needs positive trials, dims and steps");
  LemmaReport report{LemmaId::Snr, 0, 0.0, kAnalyticTolerance, {}};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const MomentPair pair = options.grid[trial % options.grid.size()];
    const std::size_t d = 1 + rng.uniform_index(dims_max);
    const std::size_t t = 1 + rng.uniform_index(t_max);
    const int kind = static_cast<int>(trial % 3);

    // kind 0: iid Gaussian; kind 1: one direction with log-normal scales;
    // kind 2: a direction that drifts slowly.
    std::vector<double> base(d);
    for (double& x : base) x = rng.normal();
    std::vector<std::vector<double>> stream;
    stream.reserve(t);
    for (std::size_t tau = 0; tau < t; ++tau) {
      std::vector<double> g(d);
      if (kind == 0) {
        for (double& x : g) x = rng.normal();
      } else if (kind == 1) {
        const double s = std::exp(rng.normal());
        for (std::size_t i = 0; i < d; ++i) g[i] = s * base[i];
      } else {
        for (double& x : base) x += 0.1 * rng.normal();
        g = base;
      }
      stream.push_back(std::move(g));
    }
    const double bound = adaptive_stepsize_bound(pair.mu1, pair.mu2) - options.bound_shift;
    const double ratio = snr_ratio(stream, pair.mu1, pair.mu2);
    track(report, ratio - bound, [&] {
      std::ostringstream os;
      os << "trial=" << trial << " mu1=" << pair.mu1 << " mu2=" << pair.mu2 << " d=" << d
         << " t=" << t << " kind=" << kind << " ratio=" << ratio;
      return os.str();
    });
  }
  return report;
}

LemmaReport check_snr_tightness(const std::vector<double>& mus, std::size_t t_max, Rng rng,
                                double bound_shift) {
  if (mus.empty() || t_max == 0) fail(ErrorCode::Precondition, "check_snr_tightness: empty grid");
  LemmaReport report{LemmaId::SnrTightness, 0, 0.0, kAnalyticTolerance, {}};
  for (double mu : mus) {
    for (std::size_t t : {std::size_t{1}, std::size_t{2}, std::size_t{10}, t_max}) {
      const std::size_t d = 1 + rng.uniform_index(16);
      std::vector<double> g(d);
      for (double& x : g) x = rng.normal();
      const std::vector<std::vector<double>> stream(t, g);
      const double ratio = snr_ratio(stream, mu, mu);
      // μ₁ = μ₂ makes the bound exactly 1.
      track(report, std::abs(ratio - (1.0 - bound_shift)), [&] {
        std::ostringstream os;
        os << "mu=" << mu << " t=" << t << " d=" << d << " ratio=" << ratio;
        return os.str();
      });
    }
  }
  return report;
}

double phi_eps(double x, double eps) { return x * x / (x + eps); }

LemmaReport check_phi_eps(const std::vector<double>& eps_grid, const std::vector<double>& x_grid) {
  if (eps_grid.empty() || x_grid.empty()) fail(ErrorCode::Precondition, "check_phi_eps: empty grid");
  LemmaReport report{LemmaId::PhiEps, 0, 0.0, kAnalyticTolerance, {}};
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) fail(ErrorCode::Precondition, "check_phi_eps requires eps > 0");
    for (double x : x_grid) {
      if (!(x >= 0.0)) fail(ErrorCode::Precondition, "check_phi_eps requires x >= 0");
      const double phi = phi_eps(x, eps);
      const double rhs = phi + std::sqrt(eps * phi);
      track(report, x - rhs, [&] {
        std::ostringstream os;
        os.precision(17);
        os << "x=" << x << " eps=" << eps << " rhs=" << rhs;
        return os.str();
      });
    }
  }
  return report;
}

namespace {

void check_series_args(double mu, std::size_t t) {
  if (!(mu > 0.0 && mu < 1.0)) fail(ErrorCode::Precondition, "series checks require mu in (0, 1)");
  if (t < 1) fail(ErrorCode::Precondition, "series checks require T >= 1");
}

template <class Term>
long double compensated_sum(std::size_t t_max, Term term) {
  long double sum = 0.0L;
  long double carry = 0.0L;
  for (std::size_t t = 1; t <= t_max; ++t) {
    const long double y = term(static_cast<long double>(t)) - carry;
    const long double s = sum + y;
    carry = (s - sum) - y;
    sum = s;
  }
  return sum;
}

template <class Sides>
LemmaReport check_series(LemmaId id, const std::vector<double>& mu_grid,
                         const std::vector<std::size_t>& t_grid, Sides sides) {
  if (mu_grid.empty() || t_grid.empty()) fail(ErrorCode::Precondition, "series check: empty grid");
  LemmaReport report{id, 0, 0.0, kAnalyticTolerance, {}};
  for (double mu : mu_grid) {
    for (std::size_t t : t_grid) {
      const auto [lhs, rhs] = sides(mu, t);
      track(report, static_cast<double>(lhs - rhs), [&] {
        std::ostringstream os;
        os.precision(17);
        os << "mu=" << mu << " T=" << t << " lhs=" << static_cast<double>(lhs)
           << " rhs=" << static_cast<double>(rhs);
        return os.str();
      });
    }
  }
  return report;
}

}  // namespace

std::pair<long double, long double> series_mut_sides(double mu, std::size_t t) {
  check_series_args(mu, t);
  const long double m = mu;
  const long double log_mu = std::log(m);
  const long double lhs =
      compensated_sum(t, [&](long double s) { return 1.0L / -std::expm1(s * log_mu); });
  const long double one_minus_mu_t = -std::expm1(static_cast<long double>(t) * log_mu);
  const long double rhs = static_cast<long double>(t) + m / (1.0L - m) -
                          (std::log(one_minus_mu_t) - std::log1p(-m)) / log_mu;
  return {lhs, rhs};
}

std::pair<long double, long double> series_mutsqrt_sides(double mu, std::size_t t) {
  check_series_args(mu, t);
  const long double m = mu;
  const long double log_mu = std::log(m);
  const long double lhs = compensated_sum(
      t, [&](long double s) { return 1.0L / std::sqrt(-std::expm1(s * log_mu)); });
  const long double one_minus_mu_t = -std::expm1(static_cast<long double>(t) * log_mu);
  const long double rhs =
      static_cast<long double>(t) - 2.0L * std::log1p(std::sqrt(one_minus_mu_t)) / log_mu;
  return {lhs, rhs};
}

LemmaReport check_series_mut(const std::vector<double>& mu_grid,
                             const std::vector<std::size_t>& t_grid) {
  return check_series(LemmaId::SeriesMut, mu_grid, t_grid, series_mut_sides);
}

LemmaReport check_series_mutsqrt(const std::vector<double>& mu_grid,
                                 const std::vector<std::size_t>& t_grid) {
  return check_series(LemmaId::SeriesMutSqrt, mu_grid, t_grid, series_mutsqrt_sides);
}

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

}  // namespace

LemmaReport check_trace_inequality(std::size_t trials, std::size_t rows_max, std::size_t cols_max,
                                   Rng rng) {
  if (trials == 0 || rows_max == 0 || cols_max == 0)
    fail(ErrorCode::Precondition, "check_trace_inequality needs positive trials and sizes");
  LemmaReport report{LemmaId::TraceOd, 0, 0.0, kSvdTolerance, {}};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(rows_max);
    const std::size_t n = 1 + rng.uniform_index(cols_max);
    const Matrix a = random_matrix(m, n, rng);

    // Trial 0 uses D = 0 and trial 1 uses D = I; the rest are random with
    // occasional exact zeros.
    std::vector<double> d(n);
    for (double& x : d) {
      if (trial == 0) x = 0.0;
      else if (trial == 1) x = 1.0;
      else x = rng.uniform() < 0.1 ? 0.0 : 2.0 * rng.uniform();
    }
    const double d_min = *std::min_element(d.begin(), d.end());
    const double lhs = inner_product(a, scale_columns(orthogonalize(a), d));
    const double rhs = d_min * nuclear_norm(a);
    track(report, rhs - lhs, [&] {
      std::ostringstream os;
      os << "trial=" << trial << " shape=" << m << "x" << n << " d_min=" << d_min
         << " lhs=" << lhs << " rhs=" << rhs;
      return os.str();
    });
  }
  return report;
}

LemmaReport check_trace_duality(std::size_t trials, std::size_t rows_max, std::size_t cols_max,
                                Rng rng) {
  if (trials == 0 || rows_max == 0 || cols_max == 0)
    fail(ErrorCode::Precondition, "check_trace_duality needs positive trials and sizes");
  LemmaReport report{LemmaId::TraceOdDuality, 0, 0.0, kSvdTolerance, {}};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(rows_max);
    const std::size_t n = 1 + rng.uniform_index(cols_max);
    const Matrix a = random_matrix(m, n, rng);
    const double lhs = inner_product(a, orthogonalize(a));
    const double rhs = nuclear_norm(a);
    track(report, std::abs(lhs - rhs), [&] {
      std::ostringstream os;
      os << "trial=" << trial << " shape=" << m << "x" << n << " inner=" << lhs
         << " nuclear=" << rhs;
      return os.str();
    });
  }
  return report;
}

std::vector<double> default_phi_x_grid() {
  std::vector<double> out{0.0};
  const auto tail = logspace(-12.0, 6.0, 10);
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

std::vector<double> default_phi_eps_grid() { return logspace(-12.0, 3.0, 10); }

std::vector<double> default_series_mu_grid() { return {1e-6, 0.5, 0.9, 0.99, 0.999}; }

std::vector<std::size_t> default_series_t_grid() { return {1, 10, 100, 1000, 10000}; }

std::vector<LemmaReport> run_lemma_suite(const LemmaSuiteOptions& options) {
  const Rng root(options.seed);
  SnrCheckOptions snr;
  snr.bound_shift = options.snr_bound_shift;
  std::vector<LemmaReport> out;
  out.push_back(check_snr_bound(options.trials, 64, 100, root.split(1), snr));
  out.push_back(check_phi_eps(default_phi_eps_grid(), default_phi_x_grid()));
  out.push_back(check_series_mut(default_series_mu_grid(), default_series_t_grid()));
  out.push_back(check_series_mutsqrt(default_series_mu_grid(), default_series_t_grid()));
  out.push_back(check_trace_inequality(options.trials, 16, 12, root.split(2)));
  out.push_back(check_snr_tightness({0.5, 0.9, 0.95, 0.99}, 100, root.split(3),
                                    options.snr_bound_shift));
  out.push_back(check_trace_duality(options.trials, 16, 12, root.split(4)));
  return out;
}

double estimate_rate_slope(const std::vector<std::pair<double, double>>& records) {
  std::set<double> distinct;
  for (const auto& [t, y] : records) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorCode::Input, "rate slope: T must be positive");
    if (!(y > 0.0) || !std::isfinite(y))
      fail(ErrorCode::Input, "rate slope: measurements must be positive");
    distinct.insert(t);
  }
  if (distinct.size() < 3) fail(ErrorCode::Input, "rate slope needs at least 3 distinct T values");

  const double n = static_cast<double>(records.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [t, y] : records) {
    mx += std::log(t);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [t, y] : records) {
    const double dx = std::log(t) - mx;
    sxy += dx * (std::log(y) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace namo
