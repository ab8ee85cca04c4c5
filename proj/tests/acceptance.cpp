// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "namo/config.hpp"
#include "namo/harness.hpp"
#include "namo/linalg.hpp"
#include "namo/optimizers.hpp"
#include "namo/orthogonalize.hpp"
#include "namo/problems.hpp"
#include "namo/verification.hpp"

using namespace namo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Matrix gaussian(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

// ---------------------------------------------------------------------------

Outcome snr_suite() {
  Outcome o;
  bool has_training_pair = false;
  for (const auto& p : default_snr_grid())
    has_training_pair = has_training_pair || (p.mu1 == 0.95 && p.mu2 == 0.99);
  o.require(has_training_pair, "grid includes (0.95, 0.99)");
  const LemmaReport bound = check_snr_bound(1000, 64, 100, Rng(20240601).split(1));
  o.require(bound.trials == 1000 && bound.max_violation <= 1e-12,
            "SNR max_violation=" + fmt("%.3g", bound.max_violation) + " <= 1e-12");
  const LemmaReport tight = check_snr_tightness({0.5, 0.9, 0.95, 0.99}, 100, Rng(20240601).split(3));
  o.require(tight.max_violation <= 1e-12,
            "tightness |ratio-bound|=" + fmt("%.3g", tight.max_violation) + " <= 1e-12");
  return o;
}

Outcome analytic_suite() {
  Outcome o;
  const LemmaReport phi = check_phi_eps(default_phi_eps_grid(), default_phi_x_grid());
  const LemmaReport mut = check_series_mut(default_series_mu_grid(), default_series_t_grid());
  const LemmaReport sq = check_series_mutsqrt(default_series_mu_grid(), default_series_t_grid());
  o.require(phi.max_violation <= 1e-12, "PHI_EPS " + fmt("%.3g", phi.max_violation));
  o.require(mut.max_violation <= 1e-12, "SERIES_MUT " + fmt("%.3g", mut.max_violation));
  o.require(sq.max_violation <= 1e-12, "SERIES_MUTSQRT " + fmt("%.3g", sq.max_violation));
  long double worst = 0;
  for (double mu : default_series_mu_grid()) {
    const auto [l, r] = series_mut_sides(mu, 1);
    worst = std::max(worst, std::abs(l - r));
  }
  o.require(worst <= 1e-14L, "T=1 equality gap " + fmt("%.3g", static_cast<double>(worst)) +
                                 " <= 1e-14");
  return o;
}

Outcome trace_suite() {
  Outcome o;
  const LemmaReport t = check_trace_inequality(1000, 16, 12, Rng(20240601).split(2));
  const LemmaReport d = check_trace_duality(1000, 16, 12, Rng(20240601).split(4));
  o.require(t.trials == 1000 && t.max_violation <= 1e-9,
            "TRACE_OD " + fmt("%.3g", t.max_violation) + " <= 1e-9");
  o.require(d.max_violation <= 1e-9, "D=I duality gap " + fmt("%.3g", d.max_violation) + " <= 1e-9");
  return o;
}

Outcome orthogonalization() {
  Outcome o;
  Rng rng(404);
  double worst_defect = 0.0;
  for (int i = 0; i < 100; ++i)
    worst_defect = std::max(worst_defect, orthogonality_defect(orthogonalize(gaussian(64, 32, rng))));
  o.require(worst_defect <= 1e-9, "exact defect " + fmt("%.3g", worst_defect) + " <= 1e-9");

  OrthConfig ns;
  ns.method = OrthMethod::NewtonSchulz;
  double worst_dev = 0.0;
  std::vector<Matrix> inputs{Matrix::diagonal(std::vector<double>{5.0, 0.1})};
  for (int i = 0; i < 20; ++i) inputs.push_back(gaussian(4 + i, 12, rng));
  for (const Matrix& m : inputs) {
    const double norm = frobenius_norm(m) + kNewtonSchulzNormFloor;
    std::vector<double> expected;
    for (double s : reduced_svd(m).singular_values) {
      double x = s / norm;
      for (int k = 0; k < ns.ns_iterations; ++k) x = newton_schulz_scalar(x, ns.ns_coefficients);
      expected.push_back(std::abs(x));
    }
    std::vector<double> got = reduced_svd(orthogonalize(m, ns)).singular_values;
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    for (std::size_t k = 0; k < got.size(); ++k)
      worst_dev = std::max(worst_dev, std::abs(got[k] - expected[k]));
  }
  o.require(worst_dev <= 1e-6, "Newton-Schulz envelope deviation " + fmt("%.3g", worst_dev) +
                                   " <= 1e-6");
  return o;
}

Outcome bound_invariants() {
  Outcome o;
  Rng rng(505);
  const std::vector<MomentPair> pairs = default_snr_grid();
  double worst_alpha_margin = -INFINITY, worst_d_margin = -INFINITY, worst_ratio_excess = -INFINITY;
  for (int run = 0; run < 200; ++run) {
    const bool diag = run >= 100;
    const MomentPair mp = pairs[rng.uniform_index(pairs.size())];
    HyperParams hp;
    hp.eta = 1e-3;
    hp.mu1 = mp.mu1;
    hp.mu2 = mp.mu2;
    hp.epsilon = std::pow(10.0, -8.0 + 6.0 * rng.uniform());
    hp.clamp_c = 0.05 + 0.95 * rng.uniform();
    const std::size_t r = 2 + rng.uniform_index(8), c = 2 + rng.uniform_index(8);
    const double bound = adaptive_stepsize_bound(hp.mu1, hp.mu2);
    Matrix theta = gaussian(r, c, rng);
    NamoState ns = NamoState::zeros(r, c);
    NamoDState ds = NamoDState::zeros(r, c);
    for (int t = 0; t < 200; ++t) {
      const Matrix g = gaussian(r, c, rng, std::exp(3.0 * rng.normal()));
      if (!diag) {
        auto res = namo_step(theta, g, ns, hp);
        worst_alpha_margin = std::max(worst_alpha_margin, *res.diagnostics.alpha - bound);
        theta = std::move(res.theta);
        ns = std::move(res.state);
      } else {
        auto res = namo_d_step(theta, g, ds, hp);
        for (double d : *res.diagnostics.d_raw) worst_d_margin = std::max(worst_d_margin, d - bound);
        const auto& cl = *res.diagnostics.d_clamped;
        const auto [lo, hi] = std::minmax_element(cl.begin(), cl.end());
        const double limit = 1.0 / (hp.clamp_c * hp.clamp_c);
        worst_ratio_excess = std::max(worst_ratio_excess, *hi / *lo - limit);
        theta = std::move(res.theta);
        ds = std::move(res.state);
      }
    }
  }
  o.require(worst_alpha_margin < 0.0, "max(alpha - bound)=" + fmt("%.3g", worst_alpha_margin) + " < 0");
  o.require(worst_d_margin < 0.0, "max(d_raw - bound)=" + fmt("%.3g", worst_d_margin) + " < 0");
  o.require(worst_ratio_excess <= 1e-12,
            "max(d_max/d_min - 1/c^2)=" + fmt("%.3g", worst_ratio_excess) + " <= 1e-12");
  return o;
}

Outcome equivalences() {
  Outcome o;
  Rng rng(606);
  HyperParams hp;
  hp.eta = 0.01;
  hp.mu1 = 0.95;
  hp.mu2 = 0.99;
  hp.weight_decay = 0.0;

  {
    HyperParams h = hp;
    h.epsilon = 1e-30;
    const Matrix g = gaussian(8, 5, rng);
    Matrix a = gaussian(8, 5, rng), b = a;
    NamoState sa = NamoState::zeros(8, 5);
    MuonState sb = MuonState::zeros(8, 5);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      auto ra = namo_step(a, g, sa, h);
      auto rb = muon_step(b, g, sb, h);
      a = ra.theta, sa = ra.state, b = rb.theta, sb = rb.state;
      worst = std::max(worst, max_abs_diff(a, b));
    }
    o.require(worst <= 1e-10, "(a) NAMO vs Muon " + fmt("%.3g", worst) + " <= 1e-10");
  }
  {
    HyperParams h = hp;
    h.clamp_c = 0.2;
    Matrix a = gaussian(9, 1, rng), b = a;
    NamoState sa = NamoState::zeros(9, 1);
    NamoDState sb = NamoDState::zeros(9, 1);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Matrix g = gaussian(9, 1, rng);
      auto ra = namo_step(a, g, sa, h);
      auto rb = namo_d_step(b, g, sb, h);
      a = ra.theta, sa = ra.state, b = rb.theta, sb = rb.state;
      worst = std::max(worst, max_abs_diff(a, b));
    }
    o.require(worst <= 1e-10, "(b) single-column NAMO-D vs NAMO " + fmt("%.3g", worst) + " <= 1e-10");
  }
  {
    HyperParams h = hp;
    h.clamp_c = 1.0;
    Matrix theta = gaussian(6, 4, rng);
    NamoDState s = NamoDState::zeros(6, 4);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      auto r = namo_d_step(theta, gaussian(6, 4, rng), s, h);
      for (double d : *r.diagnostics.d_clamped)
        worst = std::max(worst, std::abs(d - *r.diagnostics.d_bar));
      theta = r.theta, s = r.state;
    }
    o.require(worst <= 1e-12, "(c) c=1 |D - d_bar I| " + fmt("%.3g", worst) + " <= 1e-12");
  }
  return o;
}

Outcome deterministic_rate() {
  Outcome o;
  for (OptimizerKind k : {OptimizerKind::Namo, OptimizerKind::NamoD}) {
    RateExperimentConfig cfg;
    cfg.optimizer = k;
    cfg.problem = ProblemConfig{"matrix_factorization", {16, 4, 16}, 0, 1};
    cfg.horizons = {256, 1024, 4096};
    cfg.regime = RateRegime::Deterministic;
    const RateResult r = rate_experiment(cfg);
    bool completed = true;
    for (const auto& row : r.rows) completed = completed && row.status == RunStatus::Completed;
    o.require(completed && r.slope <= -0.3, std::string(to_string(k)) + " slope " +
                                                fmt("%.4f", r.slope) + " <= -0.3");
  }
  return o;
}

Outcome noise_adaptation() {
  Outcome o;
  for (OptimizerKind k : {OptimizerKind::Namo, OptimizerKind::NamoD}) {
    BatchAdaptConfig cfg;
    cfg.optimizer = k;
    cfg.horizon = 2048;
    cfg.sigma = 1.0;
    cfg.batch_sizes = {1, 16, 256};
    cfg.seeds = {1, 2, 3, 4, 5};
    const auto rows = batch_adaptation_experiment(cfg);
    cfg.sigma = 0.0;
    cfg.batch_sizes = {1};
    const double clean = batch_adaptation_experiment(cfg)[0].mean_final_avg_grad;
    bool monotone = true;
    std::string means;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0) monotone = monotone && rows[i].mean_final_avg_grad <= rows[i - 1].mean_final_avg_grad;
      means += (i ? "," : "") + fmt("%.5f", rows[i].mean_final_avg_grad);
    }
    const double ratio = rows.back().mean_final_avg_grad / clean;
    const std::string name(to_string(k));
    o.require(monotone, name + " means [" + means + "] nonincreasing in b");
    o.require(ratio <= 2.0 && ratio >= 0.5, name + " b=256 / sigma=0 = " + fmt("%.4f", ratio));
  }
  return o;
}

Outcome gradient_checks() {
  Outcome o;
  const std::vector<std::shared_ptr<const Problem>> problems{
      make_problem("matrix_least_squares", {}, 0, 1), make_problem("matrix_factorization", {}, 0, 1),
      make_problem("mlp", {}, 0, 1)};
  Rng rng(909);
  for (const auto& p : problems) {
    double worst = 0.0;
    for (int point = 0; point < 5; ++point) {
      ParamList w;
      for (const auto& s : p->params_spec()) w.push_back(gaussian(s.rows(), s.cols(), rng, 0.5));
      const ParamList g = p->grad(w);
      const ParamList fd = finite_difference_grad(*p, w, 1e-5);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t k = 0; k < g[i].size(); ++k) {
          const double a = g[i].data()[k], b = fd[i].data()[k];
          // Pure relative error per coordinate; an exact zero falls back to absolute.
          worst = std::max(worst, std::abs(a - b) / (a != 0.0 ? std::abs(a) : 1.0));
        }
    }
    o.require(worst <= 1e-5, std::string(p->name()) + " " + fmt("%.3g", worst) + " <= 1e-5");
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(NAMO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "namo_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = (dir / "run.ini").string();
  std::ofstream(cfg) << "[problem]\nname = mlp\n[optimizer]\nname = namo_d\neta = 0.01\n"
                        "[noise]\nkind = minibatch\nbatch_size = 8\n[run]\nsteps = 200\n"
                        "log_every = 10\nrepeats = 2\n";
  const int r1 = cli("run --config " + cfg + " --out " + (dir / "a").string());
  const int r2 = cli("run --config " + cfg + " --out " + (dir / "b").string());
  bool identical = r1 == 0 && r2 == 0;
  for (const char* f : {"run_repeat0.csv", "run_repeat1.csv", "summary.json"}) {
    const std::string a = slurp(dir / "a" / f);
    identical = identical && !a.empty() && a == slurp(dir / "b" / f);
  }
  o.require(identical, "two runs byte-identical");

  std::ofstream(dir / "bad.ini") << "[run]\nsteps = 0\n";
  const int ok = cli("verify-lemmas --trials 50 --out " + (dir / "v").string());
  const int config = cli("run --config " + (dir / "bad.ini").string() + " --out " + (dir / "x").string());
  const int check = cli("verify-lemmas --trials 50 --perturb-bound 0.01 --out " + (dir / "p").string());
  const int io = cli("run --config " + (dir / "missing.ini").string() + " --out " + (dir / "y").string());
  o.require(ok == 0 && config == 1 && check == 2 && io == 3,
            "exit codes ok/config/lemma/io = " + std::to_string(ok) + "/" + std::to_string(config) +
                "/" + std::to_string(check) + "/" + std::to_string(io));
  fs::remove_all(dir);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 means no runtime requirement
  std::function<Outcome()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "SNR bound and tightness", 10.0, snr_suite},
      {2, "phi and series bounds", 1.0, analytic_suite},
      {3, "trace inequality and duality", 30.0, trace_suite},
      {4, "orthogonalization accuracy", 0.0, orthogonalization},
      {5, "adaptive stepsize bounds", 0.0, bound_invariants},
      {6, "optimizer equivalences", 0.0, equivalences},
      {7, "deterministic rate slope", 120.0, deterministic_rate},
      {8, "noise adaptation in batch size", 300.0, noise_adaptation},
      {9, "gradient finite differences", 0.0, gradient_checks},
      {10, "determinism and exit codes", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0)
      out.require(secs < c.budget_seconds,
                  "runtime " + fmt("%.2f", secs) + "s < " + fmt("%.0f", c.budget_seconds) + "s");
    else
      out.detail += "; runtime " + fmt("%.2f", secs) + "s";
    std::printf("%s criterion %d (%s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
