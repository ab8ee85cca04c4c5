#include "namo/namo.h"

#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "namo/error.hpp"
#include "namo/harness.hpp"
#include "namo/linalg.hpp"
#include "namo/optimizers.hpp"
#include "namo/orthogonalize.hpp"
#include "namo/problems.hpp"

struct namo_matrix {
  namo::Matrix value;
};

struct namo_optimizer {
  namo::ParameterOptimizer value;
};

struct namo_problem {
  std::shared_ptr<const namo::Problem> value;
};

namespace {

thread_local std::string g_last_error;

namo_status status_of(namo::ErrorCode code) {
  switch (code) {
    case namo::ErrorCode::Dimension: return NAMO_ERR_DIMENSION;
    case namo::ErrorCode::Input: return NAMO_ERR_INPUT;
    case namo::ErrorCode::Numerical: return NAMO_ERR_NUMERICAL;
    case namo::ErrorCode::Config: return NAMO_ERR_CONFIG;
    case namo::ErrorCode::Io: return NAMO_ERR_IO;
    case namo::ErrorCode::Precondition: return NAMO_ERR_PRECONDITION;
  }
  return NAMO_ERR_INTERNAL;
}

namo_status set_error(namo_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
namo_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const namo::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NAMO_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NAMO_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) namo::fail(namo::ErrorCode::Input, what);
}

namo::OptimizerKind kind_of(namo_optimizer_kind k) {
  switch (k) {
    case NAMO_OPT_NAMO: return namo::OptimizerKind::Namo;
    case NAMO_OPT_NAMO_D: return namo::OptimizerKind::NamoD;
    case NAMO_OPT_MUON: return namo::OptimizerKind::Muon;
    case NAMO_OPT_ADAMW: return namo::OptimizerKind::AdamW;
  }
  namo::fail(namo::ErrorCode::Config, "unknown optimizer kind");
}

namo::OrthConfig orth_of(const namo_orth_config& c) {
  namo::OrthConfig o;
  if (c.method == NAMO_ORTH_EXACT) {
    o.method = namo::OrthMethod::Exact;
  } else if (c.method == NAMO_ORTH_NEWTON_SCHULZ) {
    o.method = namo::OrthMethod::NewtonSchulz;
  } else {
    namo::fail(namo::ErrorCode::Config, "unknown orthogonalization method");
  }
  if (c.ns_iterations < 0) namo::fail(namo::ErrorCode::Config, "ns_iterations must be >= 0");
  o.ns_iterations = c.ns_iterations;
  std::copy(std::begin(c.ns_coefficients), std::end(c.ns_coefficients), o.ns_coefficients.begin());
  o.rank_tolerance = c.rank_tolerance;
  o.zero_threshold = c.zero_threshold;
  return o;
}

namo_orth_config orth_to_c(const namo::OrthConfig& o) {
  namo_orth_config c{};
  c.method = o.method == namo::OrthMethod::Exact ? NAMO_ORTH_EXACT : NAMO_ORTH_NEWTON_SCHULZ;
  c.ns_iterations = o.ns_iterations;
  std::copy(o.ns_coefficients.begin(), o.ns_coefficients.end(), c.ns_coefficients);
  c.rank_tolerance = o.rank_tolerance;
  c.zero_threshold = o.zero_threshold;
  return c;
}

namo::HyperParams hp_of(const namo_hyperparams& h) {
  namo::HyperParams hp;
  hp.eta = h.eta;
  hp.mu1 = h.mu1;
  hp.mu2 = h.mu2;
  hp.epsilon = h.epsilon;
  hp.weight_decay = h.weight_decay;
  hp.clamp_c = h.clamp_c;
  hp.orth = orth_of(h.orth);
  return hp;
}

namo::ParamList gather(const namo_matrix* const* params, std::size_t count) {
  require(params != nullptr || count == 0, "params must not be null");
  namo::ParamList out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    require(params[i] != nullptr, "parameter handle must not be null");
    out.push_back(params[i]->value);
  }
  return out;
}

std::string str_or(const char* s, const char* fallback) { return s ? s : fallback; }

}  // namespace

extern "C" {

const char* namo_last_error(void) { return g_last_error.c_str(); }

const char* namo_status_name(namo_status status) {
  switch (status) {
    case NAMO_OK: return "ok";
    case NAMO_ERR_DIMENSION: return "dimension";
    case NAMO_ERR_INPUT: return "input";
    case NAMO_ERR_NUMERICAL: return "numerical";
    case NAMO_ERR_CONFIG: return "config";
    case NAMO_ERR_IO: return "io";
    case NAMO_ERR_PRECONDITION: return "precondition";
    case NAMO_ERR_CHECK_FAILED: return "check_failed";
    case NAMO_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

namo_status namo_matrix_create(size_t rows, size_t cols, const double* data, namo_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    *out = nullptr;
    namo::Matrix m = data ? namo::Matrix(rows, cols, std::vector<double>(data, data + rows * cols))
                          : namo::Matrix(rows, cols);
    *out = new namo_matrix{std::move(m)};
    return NAMO_OK;
  });
}

void namo_matrix_destroy(namo_matrix* m) { delete m; }

namo_status namo_matrix_shape(const namo_matrix* m, size_t* rows, size_t* cols) {
  return guarded([&] {
    require(m && rows && cols, "null argument");
    *rows = m->value.rows();
    *cols = m->value.cols();
    return NAMO_OK;
  });
}

namo_status namo_matrix_copy_data(const namo_matrix* m, double* out, size_t capacity) {
  return guarded([&] {
    require(m && out, "null argument");
    const auto data = m->value.data();
    if (capacity < data.size()) namo::fail(namo::ErrorCode::Dimension, "output buffer too small");
    std::copy(data.begin(), data.end(), out);
    return NAMO_OK;
  });
}

namo_status namo_frobenius_norm(const namo_matrix* m, double* out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = namo::frobenius_norm(m->value);
    return NAMO_OK;
  });
}

namo_status namo_spectral_norm(const namo_matrix* m, double* out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = namo::spectral_norm(m->value);
    return NAMO_OK;
  });
}

namo_status namo_nuclear_norm(const namo_matrix* m, double* out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = namo::nuclear_norm(m->value);
    return NAMO_OK;
  });
}

void namo_orth_config_init(namo_orth_config* cfg) {
  if (cfg) *cfg = orth_to_c(namo::OrthConfig{});
}

namo_status namo_orthogonalize(const namo_matrix* m, const namo_orth_config* cfg,
                               namo_matrix** out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = nullptr;
    const namo::OrthConfig o = cfg ? orth_of(*cfg) : namo::OrthConfig{};
    *out = new namo_matrix{namo::orthogonalize(m->value, o)};
    return NAMO_OK;
  });
}

void namo_hyperparams_init(namo_hyperparams* hp, namo_optimizer_kind kind) {
  if (!hp) return;
  namo::HyperParams d;
  try {
    d = namo::default_hyperparams(kind_of(kind));
  } catch (const namo::Error&) {
  }
  hp->eta = d.eta;
  hp->mu1 = d.mu1;
  hp->mu2 = d.mu2;
  hp->epsilon = d.epsilon;
  hp->weight_decay = d.weight_decay;
  hp->clamp_c = d.clamp_c;
  hp->orth = orth_to_c(d.orth);
}

namo_status namo_optimizer_create(namo_optimizer_kind kind, size_t rows, size_t cols,
                                  namo_optimizer** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    *out = nullptr;
    *out = new namo_optimizer{namo::ParameterOptimizer(kind_of(kind), rows, cols)};
    return NAMO_OK;
  });
}

void namo_optimizer_destroy(namo_optimizer* opt) { delete opt; }

namo_status namo_optimizer_step(namo_optimizer* opt, namo_matrix* theta, const namo_matrix* grad,
                                const namo_hyperparams* hp, namo_step_diagnostics* diag) {
  return guarded([&] {
    require(opt && theta && grad && hp, "null argument");
    const namo::StepDiagnostics d = opt->value.step(theta->value, grad->value, hp_of(*hp));
    if (diag) {
      *diag = namo_step_diagnostics{};
      diag->has_alpha = d.alpha.has_value();
      diag->alpha = d.alpha.value_or(0.0);
      if (d.d_clamped && !d.d_clamped->empty()) {
        diag->has_d = 1;
        diag->d_bar = d.d_bar.value_or(0.0);
        const auto [lo, hi] = std::minmax_element(d.d_clamped->begin(), d.d_clamped->end());
        diag->d_min = *lo;
        diag->d_max = *hi;
      }
      diag->update_frobenius = d.update_frobenius;
    }
    return NAMO_OK;
  });
}

namo_status namo_optimizer_steps(const namo_optimizer* opt, uint64_t* out) {
  return guarded([&] {
    require(opt && out, "null argument");
    *out = opt->value.steps_completed();
    return NAMO_OK;
  });
}

namo_status namo_route_parameter(const size_t* dims, size_t ndims, int* matrix_rule) {
  return guarded([&] {
    require(matrix_rule != nullptr && (dims != nullptr || ndims == 0), "null argument");
    const std::vector<std::size_t> d(dims, dims + ndims);
    *matrix_rule = namo::route_parameter(d) == namo::ParamRule::MatrixRule ? 1 : 0;
    return NAMO_OK;
  });
}

namo_status namo_problem_create(const char* name, const size_t* dims, size_t ndims,
                                size_t dataset_size, uint64_t seed, namo_problem** out) {
  return guarded([&] {
    require(name && out && (dims != nullptr || ndims == 0), "null argument");
    *out = nullptr;
    const std::vector<std::size_t> d(dims, dims + ndims);
    *out = new namo_problem{namo::make_problem(name, d, dataset_size, seed)};
    return NAMO_OK;
  });
}

void namo_problem_destroy(namo_problem* p) { delete p; }

namo_status namo_problem_param_count(const namo_problem* p, size_t* out) {
  return guarded([&] {
    require(p && out, "null argument");
    *out = p->value->params_spec().size();
    return NAMO_OK;
  });
}

namo_status namo_problem_initial_param(const namo_problem* p, uint64_t seed, size_t index,
                                       namo_matrix** out) {
  return guarded([&] {
    require(p && out, "null argument");
    *out = nullptr;
    namo::ParamList init = p->value->initial_params(seed);
    if (index >= init.size()) namo::fail(namo::ErrorCode::Dimension, "parameter index out of range");
    *out = new namo_matrix{std::move(init[index])};
    return NAMO_OK;
  });
}

namo_status namo_problem_loss(const namo_problem* p, const namo_matrix* const* params,
                              size_t count, double* out) {
  return guarded([&] {
    require(p && out, "null argument");
    *out = p->value->loss(gather(params, count));
    return NAMO_OK;
  });
}

namo_status namo_problem_grad(const namo_problem* p, const namo_matrix* const* params,
                              size_t count, namo_matrix** out) {
  return guarded([&] {
    require(p && out, "null argument");
    namo::ParamList g = p->value->grad(gather(params, count));
    std::vector<std::unique_ptr<namo_matrix>> owned;
    for (auto& m : g) owned.push_back(std::make_unique<namo_matrix>(namo_matrix{std::move(m)}));
    for (std::size_t i = 0; i < owned.size(); ++i) out[i] = owned[i].release();
    return NAMO_OK;
  });
}

namo_status namo_cmd_run(const char* config_path, const char* out_dir) {
  return guarded([&] {
    require(config_path && out_dir, "null argument");
    namo::run_command(config_path, out_dir);
    return NAMO_OK;
  });
}

namo_status namo_cmd_sweep(const char* config_path, const double* etas, size_t n_etas,
                           const double* cs, size_t n_cs, const char* out_dir) {
  return guarded([&] {
    require(config_path && out_dir, "null argument");
    require(etas != nullptr || n_etas == 0, "null eta grid");
    require(cs != nullptr || n_cs == 0, "null c grid");
    namo::sweep_command(config_path, std::vector<double>(etas, etas + n_etas),
                        std::vector<double>(cs, cs + n_cs), out_dir);
    return NAMO_OK;
  });
}

void namo_rates_request_init(namo_rates_request* req) {
  if (!req) return;
  const namo::RateExperimentConfig d;
  *req = namo_rates_request{};
  req->problem = "matrix_factorization";
  req->optimizer = NAMO_OPT_NAMO;
  req->horizons = nullptr;
  req->n_horizons = 0;
  req->stochastic = 0;
  req->eta_multiplier = d.eta_multiplier;
  req->sigma = d.sigma;
  req->batch_size = d.batch_size;
  req->clamp_c = d.clamp_c;
  req->seed = d.seed;
}

namo_status namo_cmd_rates(const namo_rates_request* req, const char* out_dir, double* slope) {
  return guarded([&] {
    require(req && out_dir, "null argument");
    require(req->horizons != nullptr || req->n_horizons == 0, "null horizon list");
    namo::RateExperimentConfig cfg;
    const std::string problem = str_or(req->problem, "matrix_factorization");
    if (problem != cfg.problem.name) cfg.problem = namo::ProblemConfig{problem, {}, 0, 1};
    cfg.optimizer = kind_of(req->optimizer);
    if (req->n_horizons > 0)
      cfg.horizons.assign(req->horizons, req->horizons + req->n_horizons);
    cfg.regime = req->stochastic ? namo::RateRegime::Stochastic : namo::RateRegime::Deterministic;
    cfg.eta_multiplier = req->eta_multiplier;
    cfg.sigma = req->sigma;
    cfg.batch_size = req->batch_size;
    cfg.clamp_c = req->clamp_c;
    cfg.seed = req->seed;
    const double s = namo::rates_command(cfg, out_dir);
    if (slope) *slope = s;
    return NAMO_OK;
  });
}

namo_status namo_cmd_verify_lemmas(size_t trials, uint64_t seed, double bound_shift,
                                   const char* out_dir) {
  return guarded([&] {
    require(out_dir != nullptr, "null argument");
    if (trials < 1) namo::fail(namo::ErrorCode::Config, "trials must be >= 1");
    namo::LemmaSuiteOptions opts;
    opts.trials = trials;
    opts.seed = seed;
    opts.snr_bound_shift = bound_shift;
    if (namo::verify_lemmas_command(opts, out_dir)) return NAMO_OK;
    return set_error(NAMO_ERR_CHECK_FAILED, "one or more lemma checks failed");
  });
}

void namo_batch_request_init(namo_batch_request* req) {
  if (!req) return;
  const namo::BatchAdaptConfig d;
  *req = namo_batch_request{};
  req->problem = "matrix_least_squares";
  req->optimizer = NAMO_OPT_NAMO;
  req->horizon = d.horizon;
  req->sigma = d.sigma;
}

namo_status namo_cmd_batch_adapt(const namo_batch_request* req, const char* out_dir) {
  return guarded([&] {
    require(req && out_dir, "null argument");
    require(req->batch_sizes != nullptr || req->n_batch_sizes == 0, "null batch-size list");
    require(req->seeds != nullptr || req->n_seeds == 0, "null seed list");
    namo::BatchAdaptConfig cfg;
    const std::string problem = str_or(req->problem, "matrix_least_squares");
    if (problem != cfg.problem.name) cfg.problem = namo::ProblemConfig{problem, {}, 0, 1};
    cfg.optimizer = kind_of(req->optimizer);
    cfg.horizon = req->horizon;
    cfg.sigma = req->sigma;
    if (req->n_batch_sizes > 0)
      cfg.batch_sizes.assign(req->batch_sizes, req->batch_sizes + req->n_batch_sizes);
    if (req->n_seeds > 0) cfg.seeds.assign(req->seeds, req->seeds + req->n_seeds);
    namo::batch_adapt_command(cfg, out_dir);
    return NAMO_OK;
  });
}

}  // extern "C"
