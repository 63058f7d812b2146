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

#include "finfl/baselines.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "finfl/data.hpp"
#include "finfl/estimator.hpp"
#include "finfl/experiments.hpp"

namespace finfl {
namespace {

TEST(TraceIn, SingleCheckpointIsGradientDot) {
  Rng rng(1);
  const MlpModel m = MlpModel::glorot(3, 4, 2, rng);
  const LabeledExample a{{0.1, 0.5, 0.9}, 0};
  const LabeledExample b{{0.7, 0.2, 0.3}, 1};
  const MlpModel ckpt[] = {m};
  const double eta[] = {1.0};
  EXPECT_EQ(tracein_score(ckpt, eta, a, b), dot(per_example_grad(m, a), per_example_grad(m, b)));
}

TEST(TraceIn, SelfInfluenceIsWeightedSquaredNorm) {
  Rng rng(2);
  const std::vector<MlpModel> ckpts = {MlpModel::glorot(3, 4, 2, rng), MlpModel::glorot(3, 4, 2, rng)};
  const std::vector<double> etas = {0.1, 0.3};
  const LabeledExample z{{0.4, 0.4, 0.1}, 1};
  double want = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    const double n = norm(per_example_grad(ckpts[t], z));
    want += etas[t] * n * n;
  }
  const double got = tracein_score(ckpts, etas, z, z);
  EXPECT_GE(got, 0.0);
  EXPECT_NEAR(got, want, 1e-14);
}

TEST(TraceIn, LengthMismatch) {
  Rng rng(3);
  const std::vector<MlpModel> ckpts = {MlpModel::glorot(3, 4, 2, rng)};
  const std::vector<double> etas = {0.1, 0.2};
  const LabeledExample z{{0.4, 0.4, 0.1}, 1};
  EXPECT_THROW(tracein_score(ckpts, etas, z, z), std::invalid_argument);
  EXPECT_THROW(tracein_score({}, {}, z, z), std::invalid_argument);
}

TEST(TraceIn, MislabeledPointsHaveHigherSelfInfluence) {
  // Planted blob setup with ten flipped labels in class 0; compare against
  // clean class-0 points.
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PlantedTask task = make_planted_task(BlobSpec{}, 20, 0.02, repetition_seed(700, seed));
    Dataset noisy = task.train;
    std::vector<std::size_t> flipped;
    for (std::size_t i = 0; i < 40; i += 4) {  // indices 0, 4, ... are class 0
      noisy.examples[i].label = 1 + i % 3;
      flipped.push_back(i);
    }
    TrainerParams p;
    p.batch_size = 16;
    p.train_batch_size = 32;
    p.seed = seed;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < 400; i += 4) candidates.push_back(i);
    const MethodScores s =
        score_candidates(noisy.examples, 4, candidates, p, TestPointMode::kSelf);
    double mis = 0.0, clean = 0.0;
    for (std::size_t i : candidates) {
      (i < 40 ? mis : clean) += s.at(Method::kTraceIn).at(i);
    }
    wins += mis / 10.0 > clean / 90.0;
  }
  EXPECT_EQ(wins, 5);
}

TEST(MeanDiff, Examples) {
  EXPECT_EQ(mean_diff_score({{1, 2, 3}, {1, 2, 3}, Similarity::kDot}), 0.0);
  EXPECT_EQ(mean_diff_score({{1, 1, 1}, {0, 0, 0}, Similarity::kDot}), 1.0);
  EXPECT_THROW(mean_diff_score({{}, {}, Similarity::kDot}), std::invalid_argument);
}

TEST(MeanDiff, HeavyTailHidesShiftThatEstimatorSees) {
  // O~ sits at +1 throughout; O~' is mostly -0.02 with one outlier that
  // restores the mean.
  SignalTrace t;
  const std::size_t n = 50;
  t.o_tilde.assign(n, 1.0);
  t.o_tilde_prime.assign(n, -0.02);
  t.o_tilde_prime.back() = 1.0 * n - (-0.02) * (n - 1);
  const double md = mean_diff_score(t);
  EXPECT_NEAR(md, 0.0, 1e-12);
  EXPECT_GE(estimate_mu(t).mu, 1.0);
}

}  // namespace
}  // namespace finfl
