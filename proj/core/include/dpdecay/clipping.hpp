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

#ifndef DPDECAY_CLIPPING_HPP_
#define DPDECAY_CLIPPING_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dpdecay/numerics.hpp"
#include "dpdecay/rng.hpp"

namespace dpdecay {

// Per-sample gradient scaling rules. Every kind guarantees that a kept
// sample contributes at most c0 to the aggregate in L2 norm; they differ in
// how gently small gradients are treated and whether large ones survive.
//
//   v2:            norm <= z: gamma = c0/z (uniform, magnitude-preserving);
//                  norm  > z: gamma = c0/(norm + w/(norm + w)).
//   dpsgd:         gamma = min(1, c0/norm); identity below c0.
//   autos:         gamma = c0/(norm + r), additive stabilizer r.
//   psac:          gamma = c0/(norm + w/(norm + w)) for all norms.
//   global:        norm <= z: gamma = c0/z; above z the sample is discarded.
//   global_adapt:  norm <= z: gamma = c0/z; above z: gamma = c0/norm, and z
//                  drifts geometrically toward the observed norm profile via
//                  adapt_threshold().
//
// At norm == z the <= branch applies.
enum class ClipKind { v2, dpsgd, autos, psac, global, global_adapt };

ClipKind clip_kind_from_string(const std::string& s);
std::string to_string(ClipKind kind);

struct ClipPolicy {
  ClipKind kind = ClipKind::dpsgd;
  double c0 = 1.0;   // sensitivity bound, > 0
  double z = 0.0;    // live upper threshold; > c0 for kinds that use it
  double w = 1.0;    // stabilizer weight (v2, psac), > 0
  double r = 0.01;   // additive stabilizer (autos), >= 0
  double adapt_target_fraction = 0.0;  // global_adapt: target exceed rate, [0, 1)

  static ClipPolicy make(ClipKind kind, double c0, double z = 0.0,
                         double w = 1.0, double r = 0.01,
                         double adapt_target_fraction = 0.0);

  bool uses_threshold() const {
    return kind == ClipKind::v2 || kind == ClipKind::global ||
           kind == ClipKind::global_adapt;
  }
};

// Replaces the live threshold; enforces z > c0.
void set_threshold(ClipPolicy& policy, double z);

// Scaling factor for a gradient of the given norm, or nullopt when the
// policy discards the sample outright (global kind above z). A discarded
// sample is absent from the aggregate; it is not a zero contribution that
// still counts toward averaging semantics downstream.
std::optional<double> scale_factor(const ClipPolicy& policy, double norm);

struct ScaledBatch {
  std::vector<DenseVector> kept;  // scaled survivors, input order preserved
  std::size_t discarded = 0;
  std::vector<double> raw_norms;  // one per input, kept or not
  double max_raw_norm = 0.0;
  double mean_raw_norm = 0.0;
};

// Applies scale_factor to every gradient. Verifies the sensitivity bound
// (scaled norm <= c0 + 1e-12) on each kept sample and throws
// std::logic_error on violation; the bound is the privacy contract, so a
// breach is a bug, not an input error.
ScaledBatch scale_batch(const ClipPolicy& policy,
                        const std::vector<DenseVector>& gradients);

// One geometric threshold update from a batch of raw norms:
//   f       = fraction of norms strictly above z
//   f~      = f + N(0, noise_scale^2) / batch
//   z      <- z * exp(f~ - target)
// The result is clamped to c0 * (1 + 1e-6) the moment it would cross below
// c0, keeping gamma = c0/z <= 1 well defined. Returns the new threshold.
double adapt_threshold(ClipPolicy& policy,
                       const std::vector<double>& raw_norms,
                       double noise_scale, RandomSource& rng);

}  // namespace dpdecay

#endif  // DPDECAY_CLIPPING_HPP_
