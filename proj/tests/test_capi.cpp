#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "namo/namo.h"

namespace fs = std::filesystem;

namespace {

struct MatrixHandle {
  namo_matrix* p = nullptr;
  ~MatrixHandle() { namo_matrix_destroy(p); }
};

std::vector<double> contents(const namo_matrix* m) {
  size_t r = 0, c = 0;
  EXPECT_EQ(namo_matrix_shape(m, &r, &c), NAMO_OK);
  std::vector<double> out(r * c);
  EXPECT_EQ(namo_matrix_copy_data(m, out.data(), out.size()), NAMO_OK);
  return out;
}

}  // namespace

TEST(CApi, MatrixLifecycleAndNorms) {
  const double data[] = {3, 0, 4, 0};
  MatrixHandle m;
  ASSERT_EQ(namo_matrix_create(2, 2, data, &m.p), NAMO_OK);
  double f = 0, s = 0, n = 0;
  EXPECT_EQ(namo_frobenius_norm(m.p, &f), NAMO_OK);
  EXPECT_EQ(namo_spectral_norm(m.p, &s), NAMO_OK);
  EXPECT_EQ(namo_nuclear_norm(m.p, &n), NAMO_OK);
  EXPECT_DOUBLE_EQ(f, 5.0);
  EXPECT_NEAR(s, 5.0, 1e-14);
  EXPECT_NEAR(n, 5.0, 1e-14);

  double small[2];
  EXPECT_EQ(namo_matrix_copy_data(m.p, small, 2), NAMO_ERR_DIMENSION);
  EXPECT_STRNE(namo_last_error(), "");
}

TEST(CApi, ErrorCodes) {
  namo_matrix* m = nullptr;
  EXPECT_EQ(namo_matrix_create(0, 2, nullptr, &m), NAMO_ERR_DIMENSION);
  EXPECT_EQ(m, nullptr);
  const double bad[] = {1.0, NAN};
  EXPECT_EQ(namo_matrix_create(1, 2, bad, &m), NAMO_ERR_INPUT);
  EXPECT_EQ(namo_frobenius_norm(nullptr, nullptr), NAMO_ERR_INPUT);
  EXPECT_STREQ(namo_status_name(NAMO_ERR_CHECK_FAILED), "check_failed");

  MatrixHandle ok;
  ASSERT_EQ(namo_matrix_create(1, 1, nullptr, &ok.p), NAMO_OK);
  EXPECT_STREQ(namo_last_error(), "");
}

TEST(CApi, Orthogonalize) {
  const double data[] = {0, -2, 2, 0};
  MatrixHandle m, o;
  ASSERT_EQ(namo_matrix_create(2, 2, data, &m.p), NAMO_OK);
  namo_orth_config cfg;
  namo_orth_config_init(&cfg);
  EXPECT_EQ(cfg.method, NAMO_ORTH_EXACT);
  EXPECT_EQ(cfg.ns_iterations, 5);
  ASSERT_EQ(namo_orthogonalize(m.p, &cfg, &o.p), NAMO_OK);
  const auto v = contents(o.p);
  const std::vector<double> expected{0, -1, 1, 0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(v[i], expected[i], 1e-15);

  cfg.method = static_cast<namo_orth_method>(9);
  MatrixHandle bad;
  EXPECT_EQ(namo_orthogonalize(m.p, &cfg, &bad.p), NAMO_ERR_CONFIG);
}

TEST(CApi, OptimizerStep) {
  namo_optimizer* opt = nullptr;
  ASSERT_EQ(namo_optimizer_create(NAMO_OPT_NAMO, 2, 2, &opt), NAMO_OK);
  const double zero[] = {0, 0, 0, 0};
  const double g[] = {0, -2, 2, 0};
  MatrixHandle theta, grad;
  ASSERT_EQ(namo_matrix_create(2, 2, zero, &theta.p), NAMO_OK);
  ASSERT_EQ(namo_matrix_create(2, 2, g, &grad.p), NAMO_OK);

  namo_hyperparams hp;
  namo_hyperparams_init(&hp, NAMO_OPT_NAMO);
  EXPECT_EQ(hp.mu1, 0.95);
  EXPECT_EQ(hp.mu2, 0.99);
  hp.eta = 0.1;
  hp.mu1 = 0.9;
  hp.weight_decay = 0.0;
  namo_step_diagnostics d;
  ASSERT_EQ(namo_optimizer_step(opt, theta.p, grad.p, &hp, &d), NAMO_OK);
  ASSERT_TRUE(d.has_alpha);
  const double alpha = 0.1 * std::sqrt(8.0) / (std::sqrt(0.08) + 1e-8);
  EXPECT_NEAR(d.alpha, alpha, 1e-12);
  const auto v = contents(theta.p);
  EXPECT_NEAR(v[1], 0.1 * alpha, 1e-12);
  EXPECT_NEAR(v[2], -0.1 * alpha, 1e-12);
  uint64_t steps = 0;
  EXPECT_EQ(namo_optimizer_steps(opt, &steps), NAMO_OK);
  EXPECT_EQ(steps, 1u);

  hp.mu1 = 0.999;
  EXPECT_EQ(namo_optimizer_step(opt, theta.p, grad.p, &hp, nullptr), NAMO_ERR_CONFIG);
  namo_optimizer_destroy(opt);
}

TEST(CApi, RouteParameter) {
  const size_t matrix[] = {64, 32}, vec[] = {64}, row[] = {1, 8};
  int rule = -1;
  EXPECT_EQ(namo_route_parameter(matrix, 2, &rule), NAMO_OK);
  EXPECT_EQ(rule, 1);
  EXPECT_EQ(namo_route_parameter(vec, 1, &rule), NAMO_OK);
  EXPECT_EQ(rule, 0);
  EXPECT_EQ(namo_route_parameter(row, 2, &rule), NAMO_OK);
  EXPECT_EQ(rule, 0);
}

TEST(CApi, ProblemLossAndGradient) {
  namo_problem* p = nullptr;
  ASSERT_EQ(namo_problem_create("matrix_factorization", nullptr, 0, 0, 1, &p), NAMO_OK);
  size_t count = 0;
  ASSERT_EQ(namo_problem_param_count(p, &count), NAMO_OK);
  ASSERT_EQ(count, 2u);
  std::vector<namo_matrix*> params(count), grads(count);
  for (size_t i = 0; i < count; ++i)
    ASSERT_EQ(namo_problem_initial_param(p, 1, i, &params[i]), NAMO_OK);
  double loss = 0;
  ASSERT_EQ(namo_problem_loss(p, params.data(), count, &loss), NAMO_OK);
  EXPECT_GT(loss, 0.0);
  ASSERT_EQ(namo_problem_grad(p, params.data(), count, grads.data()), NAMO_OK);
  size_t r = 0, c = 0;
  namo_matrix_shape(grads[0], &r, &c);
  EXPECT_EQ(r, 16u);
  EXPECT_EQ(c, 4u);
  EXPECT_EQ(namo_problem_loss(p, params.data(), 1, &loss), NAMO_ERR_DIMENSION);
  for (auto* m : params) namo_matrix_destroy(m);
  for (auto* m : grads) namo_matrix_destroy(m);
  namo_problem_destroy(p);

  EXPECT_EQ(namo_problem_create("nope", nullptr, 0, 0, 1, &p), NAMO_ERR_CONFIG);
}

TEST(CApi, Commands) {
  const fs::path dir = fs::temp_directory_path() / "namo_capi_cmds";
  fs::remove_all(dir);
  EXPECT_EQ(namo_cmd_verify_lemmas(20, 1, 0.0, (dir / "ok").c_str()), NAMO_OK);
  EXPECT_EQ(namo_cmd_verify_lemmas(20, 1, 0.01, (dir / "bad").c_str()), NAMO_ERR_CHECK_FAILED);
  EXPECT_TRUE(fs::exists(dir / "bad" / "lemmas.csv"));
  EXPECT_EQ(namo_cmd_run("/nonexistent.ini", (dir / "r").c_str()), NAMO_ERR_IO);

  namo_rates_request req;
  namo_rates_request_init(&req);
  const size_t horizons[] = {16, 64, 256};
  req.horizons = horizons;
  req.n_horizons = 3;
  double slope = 0;
  EXPECT_EQ(namo_cmd_rates(&req, (dir / "rates").c_str(), &slope), NAMO_OK);
  EXPECT_TRUE(std::isfinite(slope));

  namo_batch_request breq;
  namo_batch_request_init(&breq);
  const size_t b[] = {1, 4};
  const uint64_t seeds[] = {1, 2};
  breq.horizon = 32;
  breq.batch_sizes = b;
  breq.n_batch_sizes = 2;
  breq.seeds = seeds;
  breq.n_seeds = 2;
  EXPECT_EQ(namo_cmd_batch_adapt(&breq, (dir / "batch").c_str()), NAMO_ERR_CONFIG);
  fs::remove_all(dir);
}
