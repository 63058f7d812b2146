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

// Evaluation metrics over index -> score tables.

#ifndef FINFL_METRICS_HPP_
#define FINFL_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "finfl/io.hpp"

namespace finfl {

using IndexSet = std::set<std::size_t>;

// |a n b| / |a u b|, and 1 for two empty sets.
inline double jaccard(const IndexSet& a, const IndexSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (std::size_t i : a) common += b.count(i);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

// Mean pairwise Jaccard similarity; 1 means every run selected the same set.
inline double consistency_score(std::span<const IndexSet> sets) {
  if (sets.size() < 2) throw std::invalid_argument("consistency_score: need >= 2 sets");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      total += jaccard(sets[i], sets[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

// Indices ranked by descending score, ties by ascending index.
inline std::vector<std::size_t> rank_descending(const ScoreMap& scores) {
  std::vector<std::pair<std::size_t, double>> items(scores.begin(), scores.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::size_t> order;
  order.reserve(items.size());
  for (const auto& [i, s] : items) order.push_back(i);
  return order;
}

inline IndexSet top_k(const ScoreMap& scores, std::size_t k) {
  const auto order = rank_descending(scores);
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, order.size()))};
}

inline std::size_t top_p_count(double p, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
}

// Fraction of `flagged` among the top ceil(p * n) scores.
inline double recall_at_top_p(const ScoreMap& scores, const IndexSet& flagged, double p) {
  if (flagged.empty()) throw std::invalid_argument("recall_at_top_p: empty flagged set");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("recall_at_top_p: p must lie in (0, 1]");
  for (std::size_t i : flagged) {
    if (!scores.count(i)) throw std::invalid_argument("recall_at_top_p: flagged index has no score");
  }
  const IndexSet top = top_k(scores, top_p_count(p, scores.size()));
  std::size_t hits = 0;
  for (std::size_t i : flagged) hits += top.count(i);
  return static_cast<double>(hits) / static_cast<double>(flagged.size());
}

namespace internal {

inline void require_common_indices(std::span<const ScoreMap> runs) {
  for (const auto& run : runs) {
    if (run.size() != runs.front().size() ||
        !std::equal(run.begin(), run.end(), runs.front().begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw std::invalid_argument("score runs must share one index set");
    }
  }
}

}  // namespace internal

// Mean score of each index across runs.
inline ScoreMap mean_scores(std::span<const ScoreMap> runs) {
  if (runs.empty()) throw std::invalid_argument("mean_scores: no runs");
  internal::require_common_indices(runs);
  ScoreMap mean;
  for (const auto& [i, s] : runs.front()) {
    double m = 0.0;
    for (const auto& run : runs) m += run.at(i);
    mean[i] = m / static_cast<double>(runs.size());
  }
  return mean;
}

// sigma_i / |mu_i| per index, with the population sigma. Indices whose mean
// is exactly 0 have no entry.
inline ScoreMap per_index_cv(std::span<const ScoreMap> runs) {
  if (runs.size() < 2) throw std::invalid_argument("per_index_cv: need >= 2 runs");
  const ScoreMap mean = mean_scores(runs);
  ScoreMap cv;
  for (const auto& [i, m] : mean) {
    if (m == 0.0) continue;
    double var = 0.0;
    for (const auto& run : runs) var += (run.at(i) - m) * (run.at(i) - m);
    cv[i] = std::sqrt(var / static_cast<double>(runs.size())) / std::fabs(m);
  }
  return cv;
}

struct VariationReport {
  double mean_cv = 0.0;      // average of sigma_i / |mu_i| over included indices
  std::size_t included = 0;  // indices that contributed
  std::size_t excluded = 0;  // top-p indices skipped because mu_i == 0
};

// Average per-index coefficient of variation over the top ceil(top_p * n)
// indices ranked by mean score across runs.
inline VariationReport coefficient_of_variation(std::span<const ScoreMap> runs, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw std::invalid_argument("coefficient_of_variation: top_p must lie in (0, 1]");
  }
  const ScoreMap cv = per_index_cv(runs);
  const ScoreMap mean = mean_scores(runs);
  VariationReport report;
  double total = 0.0;
  for (std::size_t i : top_k(mean, top_p_count(top_p, mean.size()))) {
    auto it = cv.find(i);
    if (it == cv.end()) {
      ++report.excluded;
      continue;
    }
    total += it->second;
    ++report.included;
  }
  report.mean_cv = report.included == 0 ? 0.0 : total / static_cast<double>(report.included);
  return report;
}

}  // namespace finfl

#endif  // FINFL_METRICS_HPP_
