#include "namo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

#include <json.hpp>

#include "namo/error.hpp"

namespace namo {

std::string_view to_string(RunStatus status) {
  return status == RunStatus::Completed ? "completed" : "diverged";
}

double RunResult::final_loss() const {
  return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().loss;
}

double RunResult::final_avg_grad() const {
  return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().avg_grad_fro;
}

double warmup_scale(std::size_t t, std::size_t warmup) {
  if (t < warmup) return static_cast<double>(t) / static_cast<double>(warmup);
  return 1.0;
}

namespace {

ParamDiagnostics summarize(const StepDiagnostics& d) {
  ParamDiagnostics out;
  out.alpha = d.alpha;
  out.d_bar = d.d_bar;
  if (d.d_clamped && !d.d_clamped->empty()) {
    const auto [lo, hi] = std::minmax_element(d.d_clamped->begin(), d.d_clamped->end());
    out.d_min = *lo;
    out.d_max = *hi;
  }
  if (d.d_raw && !d.d_raw->empty())
    out.d_raw_max = *std::max_element(d.d_raw->begin(), d.d_raw->end());
  return out;
}

}  // namespace

RunResult run(const RunConfig& config, std::size_t repeat) {
  const auto problem = make_problem(config.problem.name, config.problem.dims,
                                    config.problem.dataset_size, config.problem.seed);
  return run(config, *problem, repeat);
}

RunResult run(const RunConfig& config, const Problem& problem, std::size_t repeat) {
  config.validate();
  const std::size_t warmup = config.effective_warmup();
  const Rng noise_root(derive_noise_seed(config, repeat));

  ParamList params = problem.initial_params(config.problem.seed);
  HybridOptimizer optimizer(config.optimizer, config.hp, config.fallback_hp, problem.param_dims(),
                            params);
  const std::size_t param_count = problem.parameter_count();

  RunResult result;
  double grad_sum = 0.0;
  auto diverge = [&](std::size_t t, std::string message) {
    result.status = RunStatus::Diverged;
    result.diverged_at = t;
    result.message = std::move(message);
    return result;
  };

  for (std::size_t t = 1; t <= config.steps; ++t) {
    ParamList exact = problem.grad(params);
    const double grad_fro = total_frobenius_norm(exact);
    if (!std::isfinite(grad_fro)) return diverge(t, "non-finite gradient");
    grad_sum += grad_fro;

    Rng step_rng = noise_root.split(t);
    ParamList sample;
    if (config.noise.kind == NoiseKind::AdditiveGaussian) {
      sample = std::move(exact);
      add_gaussian_noise(sample, param_count, config.noise, step_rng);
    } else {
      sample = problem.minibatch_grad(params, config.noise.batch_size, step_rng);
    }

    const double scale = warmup_scale(t, warmup);
    std::vector<StepDiagnostics> diags;
    try {
      diags = optimizer.step(params, sample, scale);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Numerical || e.code() == ErrorCode::Input)
        return diverge(t, e.what());
      throw;
    }

    const double loss = problem.loss(params);
    if (!std::isfinite(loss)) return diverge(t, "non-finite loss");

    if (t % config.log_every == 0 || t == config.steps) {
      RunRecord rec;
      rec.step = t;
      rec.loss = loss;
      rec.grad_fro = grad_fro;
      rec.avg_grad_fro = grad_sum / static_cast<double>(t);
      rec.eta = config.hp.eta * scale;
      for (const auto& d : diags) rec.params.push_back(summarize(d));
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::vector<double> default_eta_grid(OptimizerKind kind) {
  if (kind == OptimizerKind::Namo || kind == OptimizerKind::NamoD)
    return {0.005, 0.007, 0.009, 0.012, 0.015};
  return {0.0006, 0.0009, 0.0013, 0.0018, 0.0025};
}

std::vector<double> default_c_grid() { return {0.12, 0.40, 0.75, 0.90}; }

std::optional<std::size_t> select_best(const std::vector<SweepEntry>& entries) {
  const auto key = [](const SweepEntry& e) {
    return std::make_tuple(e.final_loss, e.eta, e.c.value_or(0.0));
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].status != RunStatus::Completed) continue;
    if (!best || key(entries[i]) < key(entries[*best])) best = i;
  }
  return best;
}

SweepResult lr_sweep(const RunConfig& base, const std::vector<double>& etas,
                     const std::vector<double>& cs) {
  if (etas.empty()) fail(ErrorCode::Config, "learning-rate grid must be nonempty");
  if (!cs.empty() && base.optimizer != OptimizerKind::NamoD)
    fail(ErrorCode::Config, "a c grid is only meaningful for namo_d");
  base.validate();

  const auto problem = make_problem(base.problem.name, base.problem.dims,
                                    base.problem.dataset_size, base.problem.seed);
  SweepResult out;
  const std::vector<std::optional<double>> c_axis =
      cs.empty() ? std::vector<std::optional<double>>{std::nullopt}
                 : std::vector<std::optional<double>>(cs.begin(), cs.end());
  for (double eta : etas) {
    for (const auto& c : c_axis) {
      RunConfig cfg = base;
      cfg.hp.eta = eta;
      if (c) cfg.hp.clamp_c = *c;
      const RunResult r = run(cfg, *problem);
      SweepEntry e;
      e.optimizer = base.optimizer;
      e.eta = eta;
      e.c = c;
      e.status = r.status;
      e.final_loss = r.final_loss();
      e.final_avg_grad = r.final_avg_grad();
      out.entries.push_back(e);
    }
  }

  out.best = select_best(out.entries);
  return out;
}

// ---------------------------------------------------------------------------

RunConfig rate_schedule(const RateExperimentConfig& cfg, std::size_t horizon) {
  if (horizon < 1) fail(ErrorCode::Config, "horizon must be >= 1");
  if (!(cfg.eta_multiplier > 0.0)) fail(ErrorCode::Config, "eta multiplier must be positive");
  const double t = static_cast<double>(horizon);
  RunConfig c = default_run_config(cfg.optimizer);
  c.problem = cfg.problem;
  c.steps = horizon;
  c.warmup_steps = 0;
  c.log_every = horizon;
  c.seed = cfg.seed;
  c.hp.weight_decay = 0.0;
  c.hp.clamp_c = cfg.clamp_c;
  c.hp.orth = cfg.orth;
  c.hp.epsilon = 1.0 / std::sqrt(t);
  if (cfg.regime == RateRegime::Deterministic) {
    c.hp.eta = cfg.eta_multiplier / std::sqrt(t);
    c.noise = NoiseModel{NoiseKind::AdditiveGaussian, 0.0, 1};
  } else {
    c.hp.eta = cfg.eta_multiplier * std::pow(t, -0.75);
    c.hp.mu1 = 1.0 - 1.0 / std::sqrt(t);
    c.hp.mu2 = c.hp.mu1;
    c.noise = NoiseModel{NoiseKind::AdditiveGaussian, cfg.sigma, cfg.batch_size};
  }
  c.fallback_hp.eta = c.hp.eta;
  c.fallback_hp.weight_decay = 0.0;
  return c;
}

RateResult rate_experiment(const RateExperimentConfig& cfg) {
  std::set<std::size_t> distinct(cfg.horizons.begin(), cfg.horizons.end());
  if (distinct.size() < 3) fail(ErrorCode::Config, "rate experiment needs >= 3 distinct horizons");

  const auto problem = make_problem(cfg.problem.name, cfg.problem.dims, cfg.problem.dataset_size,
                                    cfg.problem.seed);
  RateResult out;
  std::vector<std::pair<double, double>> points;
  for (std::size_t horizon : cfg.horizons) {
    const RunConfig rc = rate_schedule(cfg, horizon);
    const RunResult r = run(rc, *problem);
    RateRow row{horizon, rc.hp.eta, rc.hp.epsilon, rc.hp.mu1, rc.hp.mu2, r.final_avg_grad(),
                r.status};
    if (r.status == RunStatus::Completed && row.final_avg_grad > 0.0)
      points.emplace_back(static_cast<double>(horizon), row.final_avg_grad);
    out.rows.push_back(row);
  }
  std::set<double> surviving;
  for (const auto& p : points) surviving.insert(p.first);
  if (surviving.size() < 3)
    fail(ErrorCode::Numerical, "fewer than 3 rate-experiment runs completed");
  out.slope = estimate_rate_slope(points);
  return out;
}

std::vector<BatchRow> batch_adaptation_experiment(const BatchAdaptConfig& cfg) {
  if (cfg.batch_sizes.empty()) fail(ErrorCode::Config, "batch-size list must be nonempty");
  for (std::size_t i = 0; i < cfg.batch_sizes.size(); ++i) {
    if (cfg.batch_sizes[i] < 1) fail(ErrorCode::Config, "batch sizes must be >= 1");
    if (i > 0 && cfg.batch_sizes[i] <= cfg.batch_sizes[i - 1])
      fail(ErrorCode::Config, "batch sizes must be strictly increasing");
  }
  if (cfg.seeds.size() < 3) fail(ErrorCode::Config, "batch adaptation needs at least 3 seeds");
  if (!(cfg.sigma >= 0.0)) fail(ErrorCode::Config, "sigma must be nonnegative");

  const auto problem = make_problem(cfg.problem.name, cfg.problem.dims, cfg.problem.dataset_size,
                                    cfg.problem.seed);
  RateExperimentConfig schedule;
  schedule.problem = cfg.problem;
  schedule.optimizer = cfg.optimizer;
  schedule.regime = RateRegime::Stochastic;
  schedule.eta_multiplier = cfg.eta_multiplier;
  schedule.sigma = cfg.sigma;
  schedule.clamp_c = cfg.clamp_c;
  schedule.orth = cfg.orth;

  std::vector<BatchRow> rows;
  for (std::size_t b : cfg.batch_sizes) {
    schedule.batch_size = b;
    std::vector<double> finals;
    for (std::uint64_t seed : cfg.seeds) {
      schedule.seed = seed;
      const RunResult r = run(rate_schedule(schedule, cfg.horizon), *problem);
      if (r.status == RunStatus::Completed) finals.push_back(r.final_avg_grad());
    }
    BatchRow row;
    row.batch_size = b;
    row.sigma = cfg.sigma;
    row.completed_runs = finals.size();
    if (finals.empty()) {
      row.mean_final_avg_grad = std::numeric_limits<double>::quiet_NaN();
      row.stddev_final_avg_grad = std::numeric_limits<double>::quiet_NaN();
    } else {
      // Welford's update; exact for constant samples.
      double mean = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < finals.size(); ++i) {
        const double delta = finals[i] - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (finals[i] - mean);
      }
      row.mean_final_avg_grad = mean;
      row.stddev_final_avg_grad =
          finals.size() > 1 ? std::sqrt(m2 / static_cast<double>(finals.size() - 1)) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::string format_double(double x) {
  if (!std::isfinite(x)) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_optional(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string{};
}

CsvTable run_records_table(const std::vector<RunRecord>& records) {
  CsvTable t{{"step", "loss", "grad_fro", "avg_grad_fro", "alpha", "d_bar", "d_min", "d_max"}, {}};
  for (const auto& r : records) {
    // Diagnostics columns report the first parameter that has any.
    ParamDiagnostics d;
    for (const auto& p : r.params) {
      if (p.alpha || p.d_bar) {
        d = p;
        break;
      }
    }
    t.rows.push_back({std::to_string(r.step), format_double(r.loss), format_double(r.grad_fro),
                      format_double(r.avg_grad_fro), format_optional(d.alpha),
                      format_optional(d.d_bar), format_optional(d.d_min),
                      format_optional(d.d_max)});
  }
  return t;
}

CsvTable sweep_table(const SweepResult& result) {
  CsvTable t{{"optimizer", "eta", "c", "final_loss", "final_avg_grad", "status"}, {}};
  for (const auto& e : result.entries) {
    const bool ok = e.status == RunStatus::Completed;
    t.rows.push_back({std::string(to_string(e.optimizer)), format_double(e.eta), format_optional(e.c),
                      ok ? format_double(e.final_loss) : "", ok ? format_double(e.final_avg_grad) : "",
                      std::string(to_string(e.status))});
  }
  return t;
}

CsvTable lemma_table(const std::vector<LemmaReport>& reports) {
  CsvTable t{{"lemma", "trials", "max_violation", "pass"}, {}};
  for (const auto& r : reports) {
    t.rows.push_back({std::string(to_string(r.lemma_id)), std::to_string(r.trials),
                      format_double(r.max_violation), r.passed() ? "true" : "false"});
  }
  return t;
}

CsvTable rate_table(const RateResult& result) {
  CsvTable t{{"T", "eta", "epsilon", "mu1", "mu2", "final_avg_grad", "status"}, {}};
  for (const auto& r : result.rows) {
    t.rows.push_back({std::to_string(r.horizon), format_double(r.eta), format_double(r.epsilon),
                      format_double(r.mu1), format_double(r.mu2),
                      r.status == RunStatus::Completed ? format_double(r.final_avg_grad) : "",
                      std::string(to_string(r.status))});
  }
  return t;
}

CsvTable batch_table(const std::vector<BatchRow>& rows) {
  CsvTable t{{"b", "sigma", "mean_final_avg_grad", "stddev_final_avg_grad", "completed_runs"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.batch_size), format_double(r.sigma),
                      format_double(r.mean_final_avg_grad), format_double(r.stddev_final_avg_grad),
                      std::to_string(r.completed_runs)});
  }
  return t;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out;
}

namespace {

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

void write_csv(const CsvTable& table, const std::string& path) { write_text(to_csv(table), path); }

void run_command(const std::string& config_path, const std::string& out_dir) {
  const RunConfig cfg = load_run_config(config_path);
  prepare_dir(out_dir);
  const auto problem = make_problem(cfg.problem.name, cfg.problem.dims, cfg.problem.dataset_size,
                                    cfg.problem.seed);
  nlohmann::json summary;
  summary["command"] = "run";
  summary["config"] = canonical_form(cfg);
  summary["runs"] = nlohmann::json::array();
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const RunResult res = run(cfg, *problem, r);
    const std::string file =
        cfg.repeats == 1 ? "run.csv" : "run_repeat" + std::to_string(r) + ".csv";
    write_csv(run_records_table(res.records), join(out_dir, file));
    nlohmann::json entry;
    entry["file"] = file;
    entry["status"] = to_string(res.status);
    entry["final_loss"] = number_or_null(res.final_loss());
    entry["final_avg_grad"] = number_or_null(res.final_avg_grad());
    if (res.status == RunStatus::Diverged) {
      entry["diverged_at"] = res.diverged_at;
      entry["message"] = res.message;
    }
    summary["runs"].push_back(entry);
  }
  write_text(summary.dump(2) + "\n", join(out_dir, "summary.json"));
}

void sweep_command(const std::string& config_path, const std::vector<double>& etas,
                   const std::vector<double>& cs, const std::string& out_dir) {
  const RunConfig cfg = load_run_config(config_path);
  prepare_dir(out_dir);
  const std::vector<double> grid = etas.empty() ? default_eta_grid(cfg.optimizer) : etas;
  const SweepResult res = lr_sweep(cfg, grid, cs);
  write_csv(sweep_table(res), join(out_dir, "sweep.csv"));
  nlohmann::json summary;
  summary["command"] = "sweep";
  summary["config"] = canonical_form(cfg);
  summary["all_diverged"] = res.all_diverged();
  if (res.best) {
    const SweepEntry& b = res.entries[*res.best];
    summary["best"] = {{"eta", b.eta},
                       {"c", b.c ? nlohmann::json(*b.c) : nlohmann::json(nullptr)},
                       {"final_loss", number_or_null(b.final_loss)},
                       {"final_avg_grad", number_or_null(b.final_avg_grad)}};
  }
  write_text(summary.dump(2) + "\n", join(out_dir, "summary.json"));
}

double rates_command(const RateExperimentConfig& cfg, const std::string& out_dir) {
  prepare_dir(out_dir);
  const RateResult res = rate_experiment(cfg);
  write_csv(rate_table(res), join(out_dir, "rates.csv"));
  nlohmann::json summary;
  summary["command"] = "rates";
  summary["problem"] = cfg.problem.name;
  summary["optimizer"] = to_string(cfg.optimizer);
  summary["regime"] = cfg.regime == RateRegime::Deterministic ? "det" : "stoch";
  summary["slope"] = res.slope;
  write_text(summary.dump(2) + "\n", join(out_dir, "summary.json"));
  return res.slope;
}

bool verify_lemmas_command(const LemmaSuiteOptions& options, const std::string& out_dir) {
  prepare_dir(out_dir);
  const auto reports = run_lemma_suite(options);
  write_csv(lemma_table(reports), join(out_dir, "lemmas.csv"));
  bool all = true;
  nlohmann::json summary;
  summary["command"] = "verify-lemmas";
  summary["trials"] = options.trials;
  summary["seed"] = options.seed;
  summary["reports"] = nlohmann::json::array();
  for (const auto& r : reports) {
    all = all && r.passed();
    summary["reports"].push_back({{"lemma", to_string(r.lemma_id)},
                                  {"trials", r.trials},
                                  {"max_violation", number_or_null(r.max_violation)},
                                  {"tolerance", r.tolerance},
                                  {"pass", r.passed()},
                                  {"worst_case_inputs", r.worst_case_inputs}});
  }
  summary["all_passed"] = all;
  write_text(summary.dump(2) + "\n", join(out_dir, "summary.json"));
  return all;
}

void batch_adapt_command(const BatchAdaptConfig& cfg, const std::string& out_dir) {
  prepare_dir(out_dir);
  const auto rows = batch_adaptation_experiment(cfg);
  write_csv(batch_table(rows), join(out_dir, "batch.csv"));
  nlohmann::json summary;
  summary["command"] = "batch-adapt";
  summary["problem"] = cfg.problem.name;
  summary["optimizer"] = to_string(cfg.optimizer);
  summary["T"] = cfg.horizon;
  summary["sigma"] = cfg.sigma;
  bool nonincreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    nonincreasing = nonincreasing && rows[i].mean_final_avg_grad <= rows[i - 1].mean_final_avg_grad;
  summary["nonincreasing_in_b"] = nonincreasing;
  write_text(summary.dump(2) + "\n", join(out_dir, "summary.json"));
}

}  // namespace namo
