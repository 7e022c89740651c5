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

#include "dpdecay/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdecay {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
// 2^-53; maps a 53-bit integer onto [0, 1).
constexpr double kInv2to53 = 1.0 / 9007199254740992.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed)
    : base_seed_(seed), engine_(seed) {}

double RandomSource::uniform() {
  return static_cast<double>(engine_() >> 11) * kInv2to53;
}

double RandomSource::gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();        // [0, 1)
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = kTwoPi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return radius * std::cos(angle);
}

RandomSource RandomSource::child(std::uint64_t stream_id) const {
  const std::uint64_t mixed =
      splitmix64(splitmix64(base_seed_) ^
                 splitmix64(stream_id ^ 0xD1B54A32D192ED03ULL));
  return RandomSource(mixed);
}

DenseVector gaussian_noise(RandomSource& rng, std::size_t dim,
                           double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("gaussian_noise: variance must be finite and >= 0");
  }
  DenseVector out(dim);
  if (variance == 0.0) return out;
  const double stddev = std::sqrt(variance);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = stddev * rng.gaussian();
  }
  return out;
}

}  // namespace dpdecay
