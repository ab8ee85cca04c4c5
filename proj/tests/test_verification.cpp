#include <gtest/gtest.h>

#include <cmath>

#include "namo/error.hpp"
#include "namo/optimizers.hpp"
#include "namo/orthogonalize.hpp"
#include "namo/verification.hpp"
#include "test_util.hpp"

using namespace namo;
using namo::testing::random_matrix;

TEST(SnrRatio, SingleStepIsOne) {
  const std::vector<std::vector<double>> stream{{0.3, -1.2, 4.0}};
  for (auto [m1, m2] : {std::pair{0.9, 0.99}, std::pair{0.0, 0.5}})
    EXPECT_NEAR(snr_ratio(stream, m1, m2), 1.0, 1e-15);
}

TEST(SnrRatio, ConstantStreamEqualMomentsIsOne) {
  const std::vector<std::vector<double>> stream(40, std::vector<double>{1.0, 2.0});
  EXPECT_NEAR(snr_ratio(stream, 0.9, 0.9), 1.0, 1e-14);
}

TEST(SnrRatio, DirectEvaluation) {
  // Two scalar steps g = (1, -1), μ₁ = 0.5, μ₂ = 0.5:
  // m = 0.5·(0.5·1) + 0.5·(−1) = −0.25, v = 0.5·0.5 + 0.5 = 0.75,
  // bias factors 1 − 0.25 = 0.75 for both.
  const std::vector<std::vector<double>> stream{{1.0}, {-1.0}};
  const double expected = (0.25 / 0.75) / std::sqrt(0.75 / 0.75);
  EXPECT_NEAR(snr_ratio(stream, 0.5, 0.5), expected, 1e-15);
}

TEST(SnrBound, RandomStreamsHold) {
  const LemmaReport r = check_snr_bound(300, 32, 60, Rng(1));
  EXPECT_EQ(r.lemma_id, LemmaId::Snr);
  EXPECT_EQ(r.trials, 300u);
  EXPECT_LE(r.max_violation, 1e-12);
  EXPECT_TRUE(r.passed());
}

TEST(SnrBound, PerturbedBoundFails) {
  SnrCheckOptions opts;
  opts.bound_shift = 0.05;
  const LemmaReport r = check_snr_bound(300, 32, 60, Rng(1), opts);
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(r.worst_case_inputs.empty());
}

TEST(SnrBound, DefaultGridContainsTrainingValues) {
  bool found = false;
  for (const auto& p : default_snr_grid()) found = found || (p.mu1 == 0.95 && p.mu2 == 0.99);
  EXPECT_TRUE(found);
}

TEST(SnrTightness, AttainsBound) {
  const LemmaReport r = check_snr_tightness({0.5, 0.9, 0.99}, 100, Rng(2));
  EXPECT_LE(r.max_violation, 1e-12);
  EXPECT_FALSE(check_snr_tightness({0.5}, 10, Rng(2), 1e-3).passed());
}

TEST(PhiEps, Examples) {
  EXPECT_EQ(phi_eps(0.0, 1.0), 0.0);
  EXPECT_NEAR(phi_eps(1.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(phi_eps(1.0, 1.0) + std::sqrt(phi_eps(1.0, 1.0)), 1.2071067811865475, 1e-15);
  EXPECT_NEAR(phi_eps(3.0, 1e-12), 3.0, 1e-11);
}

TEST(PhiEps, GridCheckPasses) {
  const LemmaReport r = check_phi_eps(default_phi_eps_grid(), default_phi_x_grid());
  EXPECT_LE(r.max_violation, 1e-12);
  EXPECT_EQ(r.trials, default_phi_eps_grid().size() * default_phi_x_grid().size());
}

TEST(SeriesMut, BaseCaseIsEquality) {
  for (double mu : {1e-6, 0.3, 0.5, 0.9, 0.999}) {
    const auto [lhs, rhs] = series_mut_sides(mu, 1);
    EXPECT_NEAR(static_cast<double>(lhs), 1.0 / (1.0 - mu), 1e-12 / (1.0 - mu));
    EXPECT_LE(std::abs(static_cast<double>(lhs - rhs)), 1e-14);
  }
}

TEST(SeriesMut, DirectEvaluation) {
  double lhs = 0.0;
  for (int s = 1; s <= 10; ++s) lhs += 1.0 / (1.0 - std::pow(0.5, s));
  const double rhs = 10 + 1.0 - std::log((1 - std::pow(0.5, 10)) / 0.5) / std::log(0.5);
  const auto [l, r] = series_mut_sides(0.5, 10);
  EXPECT_NEAR(static_cast<double>(l), lhs, 1e-13);
  EXPECT_NEAR(static_cast<double>(r), rhs, 1e-13);
  EXPECT_LE(l, r);
}

TEST(SeriesMut, SmallMuAgreesAsymptotically) {
  const auto [l, r] = series_mut_sides(1e-6, 1000);
  EXPECT_NEAR(static_cast<double>(l), 1000.0, 1e-2);
  EXPECT_NEAR(static_cast<double>(r), 1000.0, 1e-2);
}

TEST(SeriesMutSqrt, HandEvaluatedBaseCase) {
  const auto [l, r] = series_mutsqrt_sides(0.5, 1);
  EXPECT_NEAR(static_cast<double>(l), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(static_cast<double>(r), 1 - 2 * std::log(1 + std::sqrt(0.5)) / std::log(0.5), 1e-15);
  EXPECT_NEAR(static_cast<double>(r), 2.5431, 1e-4);
}

TEST(SeriesMutSqrt, DirectEvaluation) {
  double lhs = 0.0;
  for (int s = 1; s <= 100; ++s) lhs += 1.0 / std::sqrt(1.0 - std::pow(0.9, s));
  const auto [l, r] = series_mutsqrt_sides(0.9, 100);
  EXPECT_NEAR(static_cast<double>(l), lhs, 1e-11);
  EXPECT_LE(l, r);
  const auto [l0, r0] = series_mutsqrt_sides(1e-6, 50);
  EXPECT_NEAR(static_cast<double>(l0), 50.0, 1e-3);
  EXPECT_GT(r0, l0);
}

TEST(SeriesChecks, GridsPass) {
  EXPECT_LE(check_series_mut(default_series_mu_grid(), default_series_t_grid()).max_violation,
            1e-12);
  EXPECT_LE(check_series_mutsqrt(default_series_mu_grid(), default_series_t_grid()).max_violation,
            1e-12);
  EXPECT_THROW(check_series_mut({1.0}, {5}), Error);
  EXPECT_THROW(check_series_mut({0.5}, {0}), Error);
}

TEST(TraceInequality, RandomTrialsHold) {
  const LemmaReport r = check_trace_inequality(200, 16, 12, Rng(3));
  EXPECT_LE(r.max_violation, 1e-9);
}

TEST(TraceInequality, IdentityAndZeroDiagonal) {
  Rng rng(4);
  const Matrix m = random_matrix(7, 5, rng);
  const Matrix o = orthogonalize(m);
  EXPECT_NEAR(inner_product(m, o), nuclear_norm(m), 1e-10);
  const std::vector<double> zeros(5, 0.0);
  EXPECT_EQ(inner_product(m, scale_columns(o, zeros)), 0.0);
  const LemmaReport r = check_trace_duality(100, 16, 12, Rng(5));
  EXPECT_LE(r.max_violation, 1e-9);
}

TEST(RateSlope, Examples) {
  std::vector<std::pair<double, double>> exact, flat, noisy;
  Rng rng(6);
  for (double t : {1e2, 1e3, 1e4}) {
    exact.emplace_back(t, std::pow(t, -0.5));
    flat.emplace_back(t, 3.0);
  }
  for (double t : {64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0})
    noisy.emplace_back(t, 2.0 * std::pow(t, -0.25) * (1 + 0.01 * rng.normal()));
  EXPECT_NEAR(estimate_rate_slope(exact), -0.5, 1e-10);
  EXPECT_NEAR(estimate_rate_slope(flat), 0.0, 1e-12);
  EXPECT_NEAR(estimate_rate_slope(noisy), -0.25, 0.05);
}

TEST(RateSlope, RejectsBadInput) {
  EXPECT_THROW(estimate_rate_slope({{1, 1}, {2, 1}}), Error);
  EXPECT_THROW(estimate_rate_slope({{1, 1}, {1, 2}, {1, 3}}), Error);
  EXPECT_THROW(estimate_rate_slope({{1, 1}, {2, 0}, {3, 1}}), Error);
}

TEST(LemmaSuite, ReproducibleAndAllPass) {
  LemmaSuiteOptions opts;
  opts.trials = 100;
  const auto a = run_lemma_suite(opts);
  const auto b = run_lemma_suite(opts);
  ASSERT_EQ(a.size(), 7u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].passed()) << to_string(a[i].lemma_id) << " " << a[i].worst_case_inputs;
    EXPECT_EQ(a[i].max_violation, b[i].max_violation);
    EXPECT_EQ(a[i].worst_case_inputs, b[i].worst_case_inputs);
  }
}
