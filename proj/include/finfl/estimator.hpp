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

// Stage two of f-INE: turn a SignalTrace into a signed Gaussian influence.
//
// At threshold tau the test "S was excluded" fires when a statistic is >= tau
// and H0 ("S included", samples O~) is rejected when it falls at or below tau:
//
//   alpha = |{o in O~  : o  <= tau}| / T      (type-I error)
//   beta  = |{o in O~' : o' >= tau}| / T      (type-II error)
//   mu    = Phi^-1(1 - alpha) - Phi^-1(beta)
//
// Counts are clamped to [1/2, T - 1/2] so both quantiles stay finite. With this
// orientation mu > 0 means the with-S samples sit above the without-S ones.
// The estimate is the mu of largest magnitude over the sweep thresholds
// (sentinels plus midpoints of the pooled order statistics); ties go to the
// smaller tau.

#ifndef FINFL_ESTIMATOR_HPP_
#define FINFL_ESTIMATOR_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finfl/normal.hpp"
#include "finfl/tradeoff.hpp"
#include "finfl/trainer.hpp"

namespace finfl {

struct ThresholdReport {
  double tau = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double mu = 0.0;
};

namespace internal {

struct SortedTrace {
  std::vector<double> with;
  std::vector<double> without;
};

inline SortedTrace sorted_copy(const SignalTrace& trace) {
  if (trace.o_tilde.empty() || trace.o_tilde_prime.empty()) {
    throw std::invalid_argument("estimator: empty trace");
  }
  if (trace.o_tilde.size() != trace.o_tilde_prime.size()) {
    throw std::invalid_argument("estimator: O~ and O~' lengths differ");
  }
  SortedTrace s{trace.o_tilde, trace.o_tilde_prime};
  std::sort(s.with.begin(), s.with.end());
  std::sort(s.without.begin(), s.without.end());
  return s;
}

inline ThresholdReport report_at(const SortedTrace& s, double tau) {
  const double n_with = static_cast<double>(s.with.size());
  const double n_without = static_cast<double>(s.without.size());
  const auto with_le = static_cast<double>(
      std::upper_bound(s.with.begin(), s.with.end(), tau) - s.with.begin());
  const auto without_ge = static_cast<double>(
      s.without.end() - std::lower_bound(s.without.begin(), s.without.end(), tau));
  // Clamped counts; 1 - alpha is formed from the complementary count so the
  // estimate is exactly antisymmetric under swapping O~ and O~'.
  const double a = std::clamp(with_le, 0.5, n_with - 0.5);
  const double b = std::clamp(without_ge, 0.5, n_without - 0.5);
  ThresholdReport r;
  r.tau = tau;
  r.alpha = a / n_with;
  r.beta = b / n_without;
  r.mu = normal_quantile((n_with - a) / n_with) - normal_quantile(b / n_without);
  return r;
}

}  // namespace internal

// Clamp floor 1/(2T) applied to both error rates.
inline double clamp_floor(std::size_t t) { return 0.5 / static_cast<double>(t); }

// Largest |mu| the clamped estimator can report: 2 |Phi^-1(1/(2T))|.
inline double mu_ceiling(std::size_t t) { return -2.0 * normal_quantile(clamp_floor(t)); }

inline ThresholdReport mu_at_threshold(const SignalTrace& trace, double tau) {
  return internal::report_at(internal::sorted_copy(trace), tau);
}

// Report for every sweep threshold, in increasing tau.
inline std::vector<ThresholdReport> threshold_sweep(const SignalTrace& trace) {
  const internal::SortedTrace s = internal::sorted_copy(trace);
  std::vector<ThresholdReport> out;
  for (double tau : sweep_thresholds(s.with, s.without)) out.push_back(internal::report_at(s, tau));
  return out;
}

inline GaussianInfluence estimate_mu(const SignalTrace& trace) {
  if (trace.size() < 2) throw std::invalid_argument("estimate_mu: need T >= 2");
  const auto sweep = threshold_sweep(trace);
  const ThresholdReport* best = &sweep.front();
  for (const auto& r : sweep) {
    if (std::fabs(r.mu) > std::fabs(best->mu)) best = &r;
  }
  return {best->mu};
}

}  // namespace finfl

#endif  // FINFL_ESTIMATOR_HPP_
