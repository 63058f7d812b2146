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

// End-to-end experiment protocols shared by the CLI and the acceptance suite.

#ifndef FINFL_EXPERIMENTS_HPP_
#define FINFL_EXPERIMENTS_HPP_

#include <algorithm>
#include <map>
#include <random>
#include <numeric>
#include <string>
#include <vector>

#include "finfl/baselines.hpp"
#include "finfl/data.hpp"
#include "finfl/estimator.hpp"
#include "finfl/metrics.hpp"
#include "finfl/trainer.hpp"

namespace finfl {

enum class Method { kFine, kTraceIn, kMeanDiff };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kFine: return "fine";
    case Method::kTraceIn: return "tracein";
    case Method::kMeanDiff: return "meandiff";
  }
  return "?";
}

inline Method method_from_string(const std::string& name) {
  if (name == "fine") return Method::kFine;
  if (name == "tracein") return Method::kTraceIn;
  if (name == "meandiff") return Method::kMeanDiff;
  throw std::invalid_argument("unknown method '" + name + "' (want fine, tracein or meandiff)");
}

using MethodScores = std::map<Method, ScoreMap>;

// Scores every candidate with f-INE, TraceIn and the mean difference from a
// single amortized run. TraceIn uses the main model at every epoch boundary
// with eta as the step weight.
inline MethodScores score_candidates(std::span<const LabeledExample> data, std::size_t class_count,
                                     std::span<const std::size_t> candidates,
                                     const TrainerParams& params, TestPointMode mode,
                                     const LabeledExample& shared_test = {}) {
  std::vector<MlpModel> checkpoints;
  auto traces = collect_signals_amortized(
      data, candidates, params, mode, shared_test, class_count,
      [&](std::size_t, const MlpModel& main, const MlpModel&) { checkpoints.push_back(main); });
  const std::vector<double> etas(checkpoints.size(), params.eta);
  MethodScores scores;
  for (const auto& [z, trace] : traces) {
    scores[Method::kFine][z] = estimate_mu(trace).mu;
    scores[Method::kMeanDiff][z] = mean_diff_score(trace);
    const LabeledExample& test = mode == TestPointMode::kSelf ? data[z] : shared_test;
    scores[Method::kTraceIn][z] = tracein_score(checkpoints, etas, test, data[z]);
  }
  return scores;
}

// p = 0.05, 0.10, ..., 1.00
inline std::vector<double> recall_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 20; ++k) grid.push_back(0.05 * k);
  return grid;
}

struct MislabelScan {
  MethodScores scores;
  IndexSet flagged;
};

// Self-influence ranking of every training point of a dataset that carries a
// noise mask.
inline MislabelScan run_mislabel_scan(const Dataset& noisy, const TrainerParams& params) {
  if (!noisy.noise_mask || noisy.noise_mask->empty()) {
    throw std::invalid_argument("mislabel scan needs a dataset with a non-empty noise mask");
  }
  std::vector<std::size_t> all(noisy.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  MislabelScan scan;
  scan.scores = score_candidates(noisy.examples, noisy.class_count, all, params, TestPointMode::kSelf);
  scan.flagged = IndexSet(noisy.noise_mask->begin(), noisy.noise_mask->end());
  return scan;
}

struct BlobSpec {
  std::size_t class_count = 4;
  std::size_t per_class = 100;
  std::size_t dim = 8;
  double separation = 3.0;
};

// Blob training set plus a held-out test point of class 0 drawn from the
// same generator (and therefore the same feature scaling).
struct BlobTask {
  Dataset train;
  LabeledExample test_point;
};

inline BlobTask make_blob_task(const BlobSpec& spec, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kDataGeneration);
  Dataset all = make_blobs(spec.class_count, spec.per_class + 1, spec.dim, spec.separation, rng);
  // The last class_count examples form the extra round; keep its class-0 member.
  const std::size_t first_extra = spec.class_count * spec.per_class;
  BlobTask task;
  task.test_point = all.examples[first_extra];
  all.examples.resize(first_extra);
  task.train = std::move(all);
  return task;
}

// The blob task with `copies` near-duplicates of the test point (same label,
// features jittered by `jitter` and clipped to [0, 1]) appended to the
// training set. `planted` holds their indices.
struct PlantedTask {
  Dataset train;
  LabeledExample test_point;
  std::vector<std::size_t> planted;
};

inline PlantedTask make_planted_task(const BlobSpec& spec, std::size_t copies, double jitter,
                                     std::uint64_t seed) {
  BlobTask base = make_blob_task(spec, seed);
  PlantedTask task{std::move(base.train), std::move(base.test_point), {}};
  Rng rng = make_rng(seed, Stream::kSubset);
  std::normal_distribution<double> noise(0.0, jitter);
  for (std::size_t c = 0; c < copies; ++c) {
    LabeledExample e = task.test_point;
    for (double& v : e.features) v = std::clamp(v + noise(rng), 0.0, 1.0);
    task.planted.push_back(task.train.size());
    task.train.examples.push_back(std::move(e));
  }
  return task;
}

// Runs the scorer once per (seed, ordering) and maps every score back to the
// original index. With use_shuffle_pair, each seed is run on both orderings
// of shuffle_config_pair(train, class_label); otherwise on the identity.
inline std::map<Method, std::vector<ScoreMap>> repeated_scores(
    const Dataset& train, const LabeledExample& test_point, std::span<const std::uint64_t> seeds,
    TrainerParams params, bool use_shuffle_pair, std::size_t class_label = 1) {
  std::vector<std::vector<std::size_t>> orderings;
  if (use_shuffle_pair) {
    auto [a, b] = shuffle_config_pair(train, class_label);
    orderings = {std::move(a), std::move(b)};
  } else {
    std::vector<std::size_t> id(train.size());
    std::iota(id.begin(), id.end(), std::size_t{0});
    orderings = {std::move(id)};
  }
  std::vector<std::size_t> positions(train.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  std::map<Method, std::vector<ScoreMap>> runs;
  for (std::uint64_t seed : seeds) {
    params.seed = seed;
    for (const auto& order : orderings) {
      const Dataset permuted = select(train, order);
      MethodScores s = score_candidates(permuted.examples, train.class_count, positions, params,
                                        TestPointMode::kShared, test_point);
      for (auto& [method, by_position] : s) {
        ScoreMap by_index;
        for (const auto& [pos, score] : by_position) by_index[order[pos]] = score;
        runs[method].push_back(std::move(by_index));
      }
    }
  }
  return runs;
}

inline double topk_consistency(std::span<const ScoreMap> runs, std::size_t k) {
  std::vector<IndexSet> sets;
  for (const auto& r : runs) sets.push_back(top_k(r, k));
  return consistency_score(sets);
}

}  // namespace finfl

#endif  // FINFL_EXPERIMENTS_HPP_
