//
// Copyright 2026 The finfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "finfl/estimator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"

namespace finfl {
namespace {

SignalTrace trace(std::vector<double> with, std::vector<double> without) {
  return {std::move(with), std::move(without), Similarity::kDot};
}

TEST(MuAtThreshold, IdenticalSamples) {
  const auto r = mu_at_threshold(trace({1, 2, 3, 4}, {1, 2, 3, 4}), 2.5);
  EXPECT_EQ(r.alpha, 0.5);
  EXPECT_EQ(r.beta, 0.5);
  EXPECT_EQ(r.mu, 0.0);
}

TEST(MuAtThreshold, ClampedSeparatedSamples) {
  const auto r = mu_at_threshold(trace({1, 2, 3}, {-3, -2, -1}), 0.0);
  EXPECT_DOUBLE_EQ(r.alpha, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.beta, 1.0 / 6.0);
  EXPECT_NEAR(r.mu, normal_quantile(5.0 / 6.0) - normal_quantile(1.0 / 6.0), 1e-15);
  EXPECT_NEAR(r.mu, 1.9348431322, 1e-9);
}

TEST(MuAtThreshold, SentinelGivesZero) {
  // Below every sample one count is 0 and the other T, so alpha + beta = 1.
  const auto r = mu_at_threshold(trace({1, 2, 3}, {4, 5, 6}), -100.0);
  EXPECT_NEAR(r.alpha + r.beta, 1.0, 1e-15);
  EXPECT_EQ(r.mu, 0.0);
}

TEST(MuAtThreshold, ErrorRatesStayInsideClamp) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> a(30), b(30);
  for (auto& v : a) v = n(rng);
  for (auto& v : b) v = n(rng) + 1.0;
  for (const auto& r : threshold_sweep(trace(a, b))) {
    EXPECT_GE(r.alpha, clamp_floor(30));
    EXPECT_LE(r.alpha, 1.0 - clamp_floor(30));
    EXPECT_GE(r.beta, clamp_floor(30));
    EXPECT_LE(r.beta, 1.0 - clamp_floor(30));
    EXPECT_TRUE(std::isfinite(r.mu));
  }
}

TEST(EstimateMu, EqualTracesGiveZero) {
  EXPECT_EQ(estimate_mu(trace({5, -1, 2, 2, 8}, {5, -1, 2, 2, 8})).mu, 0.0);
}

TEST(EstimateMu, MatchesBruteForceOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = 2 + trial % 25;
    std::vector<double> a(t), b(t);
    for (auto& v : a) v = n(rng) + (trial % 3) * 0.3;
    for (auto& v : b) v = n(rng);
    EXPECT_NEAR(estimate_mu(trace(a, b)).mu, oracle::estimate_mu(a, b), 1e-9) << trial;
  }
}

TEST(EstimateMu, MatchesBruteForceOracleWithTies) {
  // Rounded samples produce exact |mu| ties of both signs, which the two
  // implementations may resolve differently at the last ulp; compare sizes.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = 2 + trial % 25;
    std::vector<double> a(t), b(t);
    for (auto& v : a) v = std::round(4 * n(rng)) / 4;
    for (auto& v : b) v = std::round(4 * n(rng)) / 4;
    EXPECT_NEAR(std::fabs(estimate_mu(trace(a, b)).mu), std::fabs(oracle::estimate_mu(a, b)), 1e-9)
        << trial;
  }
}

TEST(EstimateMu, ExactAntisymmetry) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(40), b(40);
    for (auto& v : a) v = n(rng) + 0.4;
    for (auto& v : b) v = n(rng);
    EXPECT_EQ(estimate_mu(trace(a, b)).mu, -estimate_mu(trace(b, a)).mu);
  }
}

TEST(EstimateMu, GaussianRecovery) {
  std::vector<double> estimates, sums;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(2000), b(2000);
    for (auto& v : a) v = n(rng) + 1.5;
    for (auto& v : b) v = n(rng);
    const double mu = estimate_mu(trace(a, b)).mu;
    estimates.push_back(mu);
    sums.push_back(std::fabs(mu + estimate_mu(trace(b, a)).mu));
  }
  std::nth_element(estimates.begin(), estimates.begin() + 10, estimates.end());
  EXPECT_GE(estimates[10], 1.2);
  EXPECT_LE(estimates[10], 1.9);
  std::nth_element(sums.begin(), sums.begin() + 10, sums.end());
  EXPECT_LE(sums[10], 0.2);
}

TEST(EstimateMu, BoundedByCeiling) {
  const double ceiling = mu_ceiling(50);
  EXPECT_NEAR(ceiling, 4.6527, 1e-4);
  std::vector<double> a(50), b(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = 100 + i;
    b[i] = -100 - i;
  }
  const double mu = estimate_mu(trace(a, b)).mu;
  EXPECT_LE(std::fabs(mu), ceiling + 1e-12);
  EXPECT_NEAR(mu, ceiling, 1e-12);
}

TEST(EstimateMu, MonotoneUnderShiftOfWithSamples) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(25), b(25);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    const double base = estimate_mu(trace(a, b)).mu;
    for (double c : {0.1, 0.5, 2.0}) {
      auto shifted = a;
      for (auto& v : shifted) v += c;
      EXPECT_GE(estimate_mu(trace(shifted, b)).mu, base - 1e-12) << trial << ' ' << c;
    }
  }
}

TEST(EstimateMu, ScaleInvariant) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> a(30), b(30);
  for (auto& v : a) v = n(rng) + 0.3;
  for (auto& v : b) v = n(rng);
  auto a2 = a, b2 = b;
  for (auto& v : a2) v *= 8.0;  // power of two keeps every comparison exact
  for (auto& v : b2) v *= 8.0;
  EXPECT_EQ(estimate_mu(trace(a, b)).mu, estimate_mu(trace(a2, b2)).mu);
}

TEST(EstimateMu, AgreesWithEmpiricalTradeoffPoints) {
  // The estimator's test rejects "S included" when the statistic is <= tau;
  // negating every sample turns it into empirical_errors' ">= tau" test.
  const std::vector<double> a = {0.3, 1.1, 2.0, 2.5, 4.0};
  const std::vector<double> b = {-1.0, 0.2, 0.9, 1.7, 3.3};
  std::vector<double> na, nb;
  for (double v : a) na.push_back(-v);
  for (double v : b) nb.push_back(-v);
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  for (const auto& r : threshold_sweep(trace(a, b))) {
    if (!std::isfinite(r.tau)) continue;
    const CurvePoint p = empirical_errors(na, nb, -r.tau);
    EXPECT_NEAR(r.alpha, std::clamp(p.alpha, 0.1, 0.9), 1e-15);
    EXPECT_NEAR(r.beta, std::clamp(p.beta, 0.1, 0.9), 1e-15);
  }
}

TEST(EstimateMu, Errors) {
  EXPECT_THROW(estimate_mu(trace({}, {})), std::invalid_argument);
  EXPECT_THROW(estimate_mu(trace({1.0}, {2.0})), std::invalid_argument);
  EXPECT_THROW(mu_at_threshold(trace({1.0, 2.0}, {2.0}), 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace finfl
