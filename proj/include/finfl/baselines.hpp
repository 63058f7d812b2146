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

// Comparison scores: TraceIn over saved checkpoints, and the difference of
// means of a SignalTrace (an expectation-only comparison).

#ifndef FINFL_BASELINES_HPP_
#define FINFL_BASELINES_HPP_

#include <numeric>
#include <span>
#include <stdexcept>

#include "finfl/nn.hpp"
#include "finfl/trainer.hpp"

namespace finfl {

// sum_t eta_t * <grad l(theta_t, z_test), grad l(theta_t, z)>
inline double tracein_score(std::span<const MlpModel> checkpoints, std::span<const double> etas,
                            const LabeledExample& z_test, const LabeledExample& z) {
  if (checkpoints.empty() || checkpoints.size() != etas.size()) {
    throw std::invalid_argument("tracein_score: need one eta per checkpoint (and >= 1)");
  }
  double score = 0.0;
  for (std::size_t t = 0; t < checkpoints.size(); ++t) {
    score += etas[t] * dot(per_example_grad(checkpoints[t], z_test),
                           per_example_grad(checkpoints[t], z));
  }
  return score;
}

// mean(O~) - mean(O~')
inline double mean_diff_score(const SignalTrace& trace) {
  if (trace.o_tilde.empty() || trace.o_tilde_prime.empty()) {
    throw std::invalid_argument("mean_diff_score: empty trace");
  }
  const double a = std::accumulate(trace.o_tilde.begin(), trace.o_tilde.end(), 0.0) /
                   static_cast<double>(trace.o_tilde.size());
  const double b = std::accumulate(trace.o_tilde_prime.begin(), trace.o_tilde_prime.end(), 0.0) /
                   static_cast<double>(trace.o_tilde_prime.size());
  return a - b;
}

}  // namespace finfl

#endif  // FINFL_BASELINES_HPP_
