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

// Stage one of f-INE: during a single training run, record per epoch the
// gradient similarity between a test point and
//   O[t]   a random batch B_t plus the subset S       (main model)
//   O'[t]  an independent random batch B'_t            (main model)
//   Ohat[t] the same B_t plus S                         (auxiliary model)
// and return the de-trended pair (O - Ohat, O' - Ohat).
//
// The main and auxiliary models train on the full dataset with independent
// initialization and shuffling. Measurement batches exclude S and are drawn
// without replacement: at every epoch a fresh permutation of all indices is
// drawn per batch stream, and the batch is its first B entries outside S.
// The amortized collector relies on this to reproduce the single-subset
// traces for every singleton S = {z} from one run.

#ifndef FINFL_TRAINER_HPP_
#define FINFL_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finfl/io.hpp"
#include "finfl/nn.hpp"
#include "finfl/rng.hpp"

namespace finfl {

enum class Similarity { kDot, kCosine };

inline std::string to_string(Similarity s) { return s == Similarity::kDot ? "dot" : "cosine"; }

inline Similarity similarity_from_string(const std::string& name) {
  if (name == "dot") return Similarity::kDot;
  if (name == "cosine") return Similarity::kCosine;
  throw std::invalid_argument("unknown similarity '" + name + "' (want dot or cosine)");
}

struct SignalTrace {
  std::vector<double> o_tilde;
  std::vector<double> o_tilde_prime;
  Similarity similarity = Similarity::kDot;

  std::size_t size() const { return o_tilde.size(); }
};

// Run parameters shared by both collectors.
struct TrainerParams {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  // Mini-batch size of the SGD epochs; 0 means batch_size.
  std::size_t train_batch_size = 0;
  double eta = 0.05;
  std::size_t hidden_dim = 32;
  std::uint64_t seed = 0;
  Similarity similarity = Similarity::kDot;

  std::size_t sgd_batch() const { return train_batch_size == 0 ? batch_size : train_batch_size; }
  // Diagnostic: use B_t for both measurement batches.
  bool identical_batches = false;
};

struct CollectionConfig {
  TrainerParams params;
  std::vector<std::size_t> subset;
  LabeledExample test_point;
};

// Called after every epoch with the freshly updated main and auxiliary models.
using EpochObserver = std::function<void(std::size_t epoch, const MlpModel& main,
                                         const MlpModel& aux)>;

inline constexpr std::size_t kMinEpochs = 20;

// The un-differenced series behind a trace, for diagnostics.
struct RawSignals {
  std::vector<double> o;        // main model, B_t u S
  std::vector<double> o_prime;  // main model, B'_t
  std::vector<double> o_hat;    // auxiliary model, B_t u S
};

namespace internal {

inline void validate_params(const TrainerParams& p, std::size_t data_size, std::size_t subset_size) {
  if (p.epochs < kMinEpochs) {
    throw std::invalid_argument("epochs must be >= " + std::to_string(kMinEpochs) + ", got " +
                                std::to_string(p.epochs));
  }
  if (p.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (p.sgd_batch() > data_size) {
    throw std::invalid_argument("train_batch_size must not exceed |D|");
  }
  if (!(p.eta > 0.0) || !std::isfinite(p.eta)) throw std::invalid_argument("eta must be positive");
  if (p.hidden_dim == 0) throw std::invalid_argument("hidden_dim must be positive");
  if (p.batch_size + subset_size > data_size) {
    throw std::invalid_argument("batch_size + |S| <= |D| violated: " + std::to_string(p.batch_size) +
                                " + " + std::to_string(subset_size) + " > " +
                                std::to_string(data_size));
  }
}

inline std::vector<std::size_t> draw_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

// First `count` entries of `perm` that are not excluded. `sorted_excluded`
// must be sorted.
inline std::vector<std::size_t> batch_excluding(const std::vector<std::size_t>& perm,
                                                std::span<const std::size_t> sorted_excluded,
                                                std::size_t count) {
  std::vector<std::size_t> batch;
  batch.reserve(count);
  for (std::size_t i : perm) {
    if (batch.size() == count) break;
    if (!std::binary_search(sorted_excluded.begin(), sorted_excluded.end(), i)) batch.push_back(i);
  }
  return batch;
}

// Gradient in the form the similarity needs: raw for dot, unit-norm for
// cosine (a zero gradient stays zero, contributing similarity 0).
inline GradientVector similarity_gradient(const MlpModel& model, const LabeledExample& example,
                                          Similarity kind) {
  GradientVector g = per_example_grad(model, example);
  if (kind == Similarity::kCosine) {
    const double n = norm(g);
    if (n > 0.0) {
      for (double& v : g.values) v /= n;
    }
  }
  return g;
}

// Mean similarity between `test` and each example's gradient, one example at
// a time.
inline double mean_similarity(const MlpModel& model, const GradientVector& test,
                              std::span<const LabeledExample> data,
                              std::span<const std::size_t> indices, Similarity kind) {
  double acc = 0.0;
  for (std::size_t i : indices) acc += dot(test, similarity_gradient(model, data[i], kind));
  return acc / static_cast<double>(indices.size());
}

inline void add_into(std::vector<double>& acc, const GradientVector& g, double sign = 1.0) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sign * g.values[i];
}

inline double dot_raw(const std::vector<double>& a, const GradientVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b.values[i];
  return s;
}

inline void require_finite(const SignalTrace& trace) {
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (!std::isfinite(trace.o_tilde[t]) || !std::isfinite(trace.o_tilde_prime[t])) {
      throw std::runtime_error("non-finite similarity at epoch " + std::to_string(t));
    }
  }
}

struct TwinModels {
  MlpModel main;
  MlpModel aux;
};

inline TwinModels init_models(const TrainerParams& p, std::size_t input_dim, std::size_t classes) {
  Rng main_init = make_rng(p.seed, Stream::kMainInit);
  Rng aux_init = make_rng(p.seed, Stream::kAuxInit);
  return {MlpModel::glorot(input_dim, p.hidden_dim, classes, main_init),
          MlpModel::glorot(input_dim, p.hidden_dim, classes, aux_init)};
}

inline std::size_t class_count_of(std::span<const LabeledExample> data) {
  std::size_t k = 0;
  for (const auto& e : data) k = std::max(k, e.label + 1);
  return std::max<std::size_t>(k, 2);
}

}  // namespace internal

// Algorithm stage one for an explicit subset S. `class_count` of 0 means
// max label + 1.
inline SignalTrace collect_signals(std::span<const LabeledExample> data,
                                   const CollectionConfig& config, std::size_t class_count = 0,
                                   const EpochObserver& observer = {}, RawSignals* raw = nullptr) {
  const TrainerParams& p = config.params;
  if (data.empty()) throw std::invalid_argument("collect_signals: empty dataset");
  std::vector<std::size_t> subset = config.subset;
  std::sort(subset.begin(), subset.end());
  if (std::adjacent_find(subset.begin(), subset.end()) != subset.end()) {
    throw std::invalid_argument("subset indices must be distinct");
  }
  if (!subset.empty() && subset.back() >= data.size()) {
    throw std::out_of_range("subset index " + std::to_string(subset.back()) +
                            " out of range for dataset of size " + std::to_string(data.size()));
  }
  internal::validate_params(p, data.size(), subset.size());
  if (class_count == 0) class_count = internal::class_count_of(data);

  auto [theta, theta_hat] = internal::init_models(p, data.front().features.size(), class_count);
  Rng main_shuffle = make_rng(p.seed, Stream::kMainShuffle);
  Rng aux_shuffle = make_rng(p.seed, Stream::kAuxShuffle);
  Rng with_rng = make_rng(p.seed, Stream::kBatchWith);
  Rng without_rng = make_rng(p.seed, Stream::kBatchWithout);

  SignalTrace trace;
  trace.similarity = p.similarity;
  for (std::size_t t = 0; t < p.epochs; ++t) {
    const auto perm_with = internal::draw_permutation(data.size(), with_rng);
    const auto perm_without = internal::draw_permutation(data.size(), without_rng);
    std::vector<std::size_t> batch = internal::batch_excluding(perm_with, subset, p.batch_size);
    const std::vector<std::size_t> batch_prime =
        p.identical_batches ? batch : internal::batch_excluding(perm_without, subset, p.batch_size);
    batch.insert(batch.end(), subset.begin(), subset.end());

    theta = sgd_epoch(std::move(theta), data, p.eta, p.sgd_batch(), main_shuffle);
    theta_hat = sgd_epoch(std::move(theta_hat), data, p.eta, p.sgd_batch(), aux_shuffle);
    if (observer) observer(t, theta, theta_hat);

    const auto test = internal::similarity_gradient(theta, config.test_point, p.similarity);
    const auto test_hat = internal::similarity_gradient(theta_hat, config.test_point, p.similarity);
    const double o = internal::mean_similarity(theta, test, data, batch, p.similarity);
    const double o_prime = internal::mean_similarity(theta, test, data, batch_prime, p.similarity);
    const double o_hat = internal::mean_similarity(theta_hat, test_hat, data, batch, p.similarity);
    trace.o_tilde.push_back(o - o_hat);
    trace.o_tilde_prime.push_back(o_prime - o_hat);
    if (raw) {
      raw->o.push_back(o);
      raw->o_prime.push_back(o_prime);
      raw->o_hat.push_back(o_hat);
    }
  }
  internal::require_finite(trace);
  return trace;
}

// Test point used for each candidate by the amortized collector.
enum class TestPointMode {
  kSelf,    // z_test = the candidate itself (self-influence)
  kShared,  // one z_test for every candidate
};

// Stage one for every singleton subset {z}, z in `candidates`, from one main
// and one auxiliary run. Per-example gradients are computed once per epoch;
// because both similarities are linear in the batch gradients (cosine after
// normalization), each batch mean is one inner product with a summed vector.
// Trace z equals collect_signals with S = {z} and the same seed.
inline std::map<std::size_t, SignalTrace> collect_signals_amortized(
    std::span<const LabeledExample> data, std::span<const std::size_t> candidates,
    const TrainerParams& p, TestPointMode mode, const LabeledExample& shared_test = {},
    std::size_t class_count = 0, const EpochObserver& observer = {}) {
  std::map<std::size_t, SignalTrace> traces;
  if (data.empty()) throw std::invalid_argument("collect_signals_amortized: empty dataset");
  for (std::size_t z : candidates) {
    if (z >= data.size()) {
      throw std::out_of_range("candidate index " + std::to_string(z) + " out of range");
    }
  }
  internal::validate_params(p, data.size(), candidates.empty() ? 0 : 1);
  if (candidates.empty()) return traces;
  if (class_count == 0) class_count = internal::class_count_of(data);
  for (std::size_t z : candidates) traces[z].similarity = p.similarity;

  auto [theta, theta_hat] = internal::init_models(p, data.front().features.size(), class_count);
  Rng main_shuffle = make_rng(p.seed, Stream::kMainShuffle);
  Rng aux_shuffle = make_rng(p.seed, Stream::kAuxShuffle);
  Rng with_rng = make_rng(p.seed, Stream::kBatchWith);
  Rng without_rng = make_rng(p.seed, Stream::kBatchWithout);
  const std::size_t b = p.batch_size;
  const auto inv_with = 1.0 / static_cast<double>(b + 1);
  const auto inv_without = 1.0 / static_cast<double>(b);

  for (std::size_t t = 0; t < p.epochs; ++t) {
    const auto perm_with = internal::draw_permutation(data.size(), with_rng);
    const auto perm_without =
        p.identical_batches ? perm_with : internal::draw_permutation(data.size(), without_rng);

    theta = sgd_epoch(std::move(theta), data, p.eta, p.sgd_batch(), main_shuffle);
    theta_hat = sgd_epoch(std::move(theta_hat), data, p.eta, p.sgd_batch(), aux_shuffle);
    if (observer) observer(t, theta, theta_hat);

    // The batch for candidate z is the first b entries of a permutation
    // that differ from z: the prefix of length b, or b + 1 minus z.
    struct PrefixSums {
      std::vector<double> first_b;
      std::vector<double> extra;  // gradient of entry b (0-based)
      std::map<std::size_t, GradientVector> members;
    };
    auto prefix = [&](const std::vector<std::size_t>& perm, const MlpModel& model) {
      PrefixSums s{std::vector<double>(model.parameter_count(), 0.0), {}, {}};
      for (std::size_t k = 0; k <= b && k < perm.size(); ++k) {
        auto g = internal::similarity_gradient(model, data[perm[k]], p.similarity);
        if (k < b) {
          internal::add_into(s.first_b, g);
          s.members.emplace(perm[k], std::move(g));
        } else {
          s.extra = std::move(g.values);
        }
      }
      if (s.extra.empty()) s.extra.assign(model.parameter_count(), 0.0);
      return s;
    };
    const PrefixSums with_main = prefix(perm_with, theta);
    const PrefixSums with_aux = prefix(perm_with, theta_hat);
    const PrefixSums without_main = prefix(perm_without, theta);

    // <u, batch sum for candidate z>
    auto batch_dot = [](const PrefixSums& s, std::size_t z, const GradientVector& u) {
      double v = internal::dot_raw(s.first_b, u);
      auto it = s.members.find(z);
      if (it != s.members.end()) v += internal::dot_raw(s.extra, u) - dot(it->second, u);
      return v;
    };

    GradientVector shared_main, shared_aux;
    if (mode == TestPointMode::kShared) {
      shared_main = internal::similarity_gradient(theta, shared_test, p.similarity);
      shared_aux = internal::similarity_gradient(theta_hat, shared_test, p.similarity);
    }
    for (std::size_t z : candidates) {
      const auto gz = internal::similarity_gradient(theta, data[z], p.similarity);
      const auto gz_hat = internal::similarity_gradient(theta_hat, data[z], p.similarity);
      const GradientVector& u = mode == TestPointMode::kSelf ? gz : shared_main;
      const GradientVector& u_hat = mode == TestPointMode::kSelf ? gz_hat : shared_aux;
      const double o = (batch_dot(with_main, z, u) + dot(u, gz)) * inv_with;
      const double o_prime = batch_dot(without_main, z, u) * inv_without;
      const double o_hat = (batch_dot(with_aux, z, u_hat) + dot(u_hat, gz_hat)) * inv_with;
      auto& tr = traces[z];
      tr.o_tilde.push_back(o - o_hat);
      tr.o_tilde_prime.push_back(o_prime - o_hat);
    }
  }
  for (const auto& [z, tr] : traces) internal::require_finite(tr);
  return traces;
}

inline std::string format_trace_csv(const SignalTrace& trace) {
  std::string out = "t,o_tilde,o_tilde_prime\n";
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out += std::to_string(t) + ',' + format_number(trace.o_tilde[t]) + ',' +
           format_number(trace.o_tilde_prime[t]) + '\n';
  }
  return out;
}

inline SignalTrace parse_trace_csv(std::istream& in, Similarity similarity = Similarity::kDot) {
  const NumericTable table = read_numeric_csv(in, {"t", "o_tilde", "o_tilde_prime"});
  SignalTrace trace;
  trace.similarity = similarity;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r][0] != static_cast<double>(r)) {
      throw std::runtime_error("trace CSV rows must be numbered 0, 1, 2, ...");
    }
    trace.o_tilde.push_back(table.rows[r][1]);
    trace.o_tilde_prime.push_back(table.rows[r][2]);
  }
  internal::require_finite(trace);
  return trace;
}

}  // namespace finfl

#endif  // FINFL_TRAINER_HPP_
