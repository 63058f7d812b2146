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

// Seed handling. Every run starts from one 64-bit seed; each consumer of
// randomness gets its own stream derived as
//
//   stream_seed = splitmix64(run_seed ^ splitmix64(stream_id))
//
// and feeds it to a std::mt19937_64. Stream ids are the constants in
// `Stream` below, so adding a consumer never perturbs existing ones.

#ifndef FINFL_RNG_HPP_
#define FINFL_RNG_HPP_

#include <cstdint>
#include <random>

namespace finfl {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  kMainInit = 1,
  kMainShuffle = 2,
  kAuxInit = 3,
  kAuxShuffle = 4,
  kBatchWith = 5,
  kBatchWithout = 6,
  kLabelNoise = 7,
  kDataGeneration = 8,
  kSubset = 9,
};

inline constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t stream_id) {
  return splitmix64(run_seed ^ splitmix64(stream_id));
}

inline Rng make_rng(std::uint64_t run_seed, Stream stream) {
  return Rng(derive_seed(run_seed, static_cast<std::uint64_t>(stream)));
}

// Seed for repetition `rep` of a protocol that itself consumes run seeds.
inline constexpr std::uint64_t repetition_seed(std::uint64_t base_seed, std::uint64_t rep) {
  return derive_seed(base_seed, 0x1000 + rep);
}

}  // namespace finfl

#endif  // FINFL_RNG_HPP_
