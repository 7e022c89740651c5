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

#ifndef DPDECAY_SCHEDULES_HPP_
#define DPDECAY_SCHEDULES_HPP_

#include <string>

namespace dpdecay {

// How the per-epoch noise variance evolves. All decays act on the variance,
// not the standard deviation:
//
//   none:    sigma_e^2 = sigma0^2
//   linear:  sigma_e^2 = sigma0^2 * R^e
//   time:    sigma_e^2 = sigma0^2 / (1 + R*e)
//   step:    sigma_e^2 = sigma0^2 * R^floor(e/K)
enum class DecayKind { none, linear, time, step };

DecayKind decay_kind_from_string(const std::string& s);
std::string to_string(DecayKind kind);

struct DecaySchedule {
  DecayKind kind = DecayKind::none;
  double sigma0_sq = 1.0;  // starting variance, > 0
  double rate = 1.0;       // R; in (0,1) for linear/step, > 0 for time
  int period_epochs = 1;   // K >= 1; used by step only

  // Validates the (kind, sigma0_sq, R, K) combination; error messages name
  // the offending parameter.
  static DecaySchedule make(DecayKind kind, double sigma0_sq, double rate,
                            int period_epochs);
};

double noise_variance_at(const DecaySchedule& schedule, int epoch);

// Stepped upper clipping threshold: z_e = z0 * rate^floor(e/K).
struct ClipSchedule {
  double z0 = 1.0;         // > 0
  double rate = 0.5;       // in (0, 1)
  int period_epochs = 1;   // K >= 1

  static ClipSchedule make(double z0, double rate, int period_epochs);
};

double clip_threshold_at(const ClipSchedule& schedule, int epoch);

// Epoch index of iteration t under Poisson sampling rate q: floor(q * t).
// Requires q in (0, 1] and t >= 0.
int epoch_of_iteration(double sampling_rate, long long t);

}  // namespace dpdecay

#endif  // DPDECAY_SCHEDULES_HPP_
