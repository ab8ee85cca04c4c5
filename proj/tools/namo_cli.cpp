// Batch driver for optimizer experiments. Every subcommand writes its CSV and
// summary.json into --out.

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "namo/namo.h"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kCheckFailed = 2, kIoError = 3, kInternal = 4 };

int exit_code(namo_status s) {
  switch (s) {
    case NAMO_OK: return kOk;
    case NAMO_ERR_CONFIG:
    case NAMO_ERR_INPUT:
    case NAMO_ERR_DIMENSION:
    case NAMO_ERR_PRECONDITION: return kConfigError;
    case NAMO_ERR_CHECK_FAILED: return kCheckFailed;
    case NAMO_ERR_IO: return kIoError;
    default: return kInternal;
  }
}

int report(namo_status s) {
  if (s != NAMO_OK) std::fprintf(stderr, "error (%s): %s\n", namo_status_name(s), namo_last_error());
  return exit_code(s);
}

bool parse_kind(const std::string& name, namo_optimizer_kind* out) {
  if (name == "namo") *out = NAMO_OPT_NAMO;
  else if (name == "namo_d" || name == "namo-d") *out = NAMO_OPT_NAMO_D;
  else if (name == "muon") *out = NAMO_OPT_MUON;
  else if (name == "adamw") *out = NAMO_OPT_ADAMW;
  else return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonalized adaptive optimizer experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<double> etas, cs;

  auto* run = app.add_subcommand("run", "Run one configuration");
  run->add_option("--config", config_path, "INI config file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Learning-rate grid search");
  sweep->add_option("--config", config_path, "INI config file")->required();
  sweep->add_option("--etas", etas, "Comma-separated learning rates")->delimiter(',');
  sweep->add_option("--cs", cs, "Comma-separated clamp constants (namo_d)")->delimiter(',');
  sweep->add_option("--out", out_dir, "Output directory")->required();

  std::string problem = "matrix_factorization", optimizer = "namo", regime;
  std::vector<std::size_t> horizons;
  double multiplier = 1.0, sigma = 1.0, clamp_c = 0.5;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  auto* rates = app.add_subcommand("rates", "Convergence-rate experiment");
  rates->add_option("--problem", problem, "Problem name");
  rates->add_option("--optimizer", optimizer, "namo, namo_d, muon or adamw");
  rates->add_option("--T", horizons, "Comma-separated horizons")->delimiter(',')->required();
  rates->add_option("--regime", regime, "det or stoch")
      ->required()
      ->check(CLI::IsMember({"det", "stoch"}));
  rates->add_option("--multiplier", multiplier, "Global learning-rate multiplier");
  rates->add_option("--sigma", sigma, "Noise level (stoch)");
  rates->add_option("--batch", batch, "Batch size (stoch)");
  rates->add_option("--c", clamp_c, "NAMO-D clamp constant");
  rates->add_option("--seed", seed, "Noise seed");
  rates->add_option("--out", out_dir, "Output directory")->required();

  std::size_t trials = 1000;
  std::uint64_t lemma_seed = 20240601;
  double perturb = 0.0;
  auto* verify = app.add_subcommand("verify-lemmas", "Numerical lemma checks");
  verify->add_option("--trials", trials, "Random trials per check")->check(CLI::PositiveNumber);
  verify->add_option("--seed", lemma_seed, "Seed");
  verify->add_option("--perturb-bound", perturb, "Shift the SNR bound (test hook)")->group("");
  verify->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::size_t> batches;
  std::vector<std::uint64_t> seeds;
  std::size_t horizon = 2048;
  std::string batch_problem = "matrix_least_squares";
  auto* adapt = app.add_subcommand("batch-adapt", "Batch-size adaptation experiment");
  adapt->add_option("--sigma", sigma, "Noise level")->required();
  adapt->add_option("--b", batches, "Comma-separated batch sizes")->delimiter(',')->required();
  adapt->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',')->required();
  adapt->add_option("--problem", batch_problem, "Problem name");
  adapt->add_option("--optimizer", optimizer, "namo, namo_d, muon or adamw");
  adapt->add_option("--T", horizon, "Horizon");
  adapt->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  namo_optimizer_kind kind = NAMO_OPT_NAMO;
  if ((*rates || *adapt) && !parse_kind(optimizer, &kind)) {
    std::fprintf(stderr, "error (config): unknown optimizer '%s'\n", optimizer.c_str());
    return kConfigError;
  }

  if (*run) return report(namo_cmd_run(config_path.c_str(), out_dir.c_str()));

  if (*sweep) {
    return report(namo_cmd_sweep(config_path.c_str(), etas.data(), etas.size(), cs.data(),
                                 cs.size(), out_dir.c_str()));
  }

  if (*rates) {
    namo_rates_request req;
    namo_rates_request_init(&req);
    req.problem = problem.c_str();
    req.optimizer = kind;
    req.horizons = horizons.data();
    req.n_horizons = horizons.size();
    req.stochastic = regime == "stoch";
    req.eta_multiplier = multiplier;
    req.sigma = sigma;
    req.batch_size = batch;
    req.clamp_c = clamp_c;
    req.seed = seed;
    double slope = 0.0;
    const namo_status s = namo_cmd_rates(&req, out_dir.c_str(), &slope);
    if (s == NAMO_OK) std::printf("slope %.6f\n", slope);
    return report(s);
  }

  if (*verify) {
    const namo_status s = namo_cmd_verify_lemmas(trials, lemma_seed, perturb, out_dir.c_str());
    if (s == NAMO_OK) std::printf("all lemma checks passed\n");
    return report(s);
  }

  namo_batch_request req;
  namo_batch_request_init(&req);
  req.problem = batch_problem.c_str();
  req.optimizer = kind;
  req.horizon = horizon;
  req.sigma = sigma;
  req.batch_sizes = batches.data();
  req.n_batch_sizes = batches.size();
  req.seeds = seeds.data();
  req.n_seeds = seeds.size();
  return report(namo_cmd_batch_adapt(&req, out_dir.c_str()));
}
