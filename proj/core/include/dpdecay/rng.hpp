// Copyright 2026 The dpdecay Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPDECAY_RNG_HPP_
#define DPDECAY_RNG_HPP_

#include <cstdint>
#include <random>

#include "dpdecay/numerics.hpp"

namespace dpdecay {

// Deterministic random source with reproducible output across platforms.
//
// The raw stream is std::mt19937_64, whose bit sequence for a given seed is
// fixed by the language standard. Everything derived from it uses explicit
// transforms rather than the standard distribution objects, whose algorithms
// are implementation-defined and would silently vary between standard
// libraries:
//
//   uniform():  (next_u64() >> 11) * 2^-53, in [0, 1)
//   gaussian(): Box-Muller on the pair (1 - uniform(), uniform());
//               u1 = 1 - uniform() lies in (0, 1] so log(u1) is finite.
//               Each pair of uniforms yields two deviates; the second is
//               cached and returned by the next call.
//
// Child streams are derived from (base seed, stream id) via splitmix64
// mixing, never from the parent's evolved state, so the amount of randomness
// a parent has consumed cannot perturb its children.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double gaussian();

  // Independent stream addressed by id. Distinct ids give decorrelated
  // streams; the same (seed, id) always gives the same stream.
  RandomSource child(std::uint64_t stream_id) const;

  std::uint64_t base_seed() const { return base_seed_; }

 private:
  std::uint64_t base_seed_;
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

// Vector of independent N(0, variance) draws. variance must be >= 0 and
// finite; variance 0 returns an exact zero vector without consuming any
// generator state.
DenseVector gaussian_noise(RandomSource& rng, std::size_t dim,
                           double variance);

}  // namespace dpdecay

#endif  // DPDECAY_RNG_HPP_
