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

#include "dpdecay/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdecay {

DecayKind decay_kind_from_string(const std::string& s) {
  if (s == "none") return DecayKind::none;
  if (s == "linear") return DecayKind::linear;
  if (s == "time") return DecayKind::time;
  if (s == "step") return DecayKind::step;
  throw std::invalid_argument("unknown decay kind: " + s);
}

std::string to_string(DecayKind kind) {
  switch (kind) {
    case DecayKind::none: return "none";
    case DecayKind::linear: return "linear";
    case DecayKind::time: return "time";
    case DecayKind::step: return "step";
  }
  return "none";
}

DecaySchedule DecaySchedule::make(DecayKind kind, double sigma0_sq,
                                  double rate, int period_epochs) {
  if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) {
    throw std::invalid_argument("DecaySchedule: sigma0_sq must be finite and > 0");
  }
  switch (kind) {
    case DecayKind::none:
      break;
    case DecayKind::linear:
      if (!(rate > 0.0 && rate < 1.0)) {
        throw std::invalid_argument("DecaySchedule: linear decay requires rate R in (0, 1)");
      }
      break;
    case DecayKind::time:
      if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("DecaySchedule: time decay requires rate R > 0");
      }
      break;
    case DecayKind::step:
      if (!(rate > 0.0 && rate < 1.0)) {
        throw std::invalid_argument("DecaySchedule: step decay requires rate R in (0, 1)");
      }
      if (period_epochs < 1) {
        throw std::invalid_argument("DecaySchedule: step decay requires period_epochs K >= 1");
      }
      break;
  }
  DecaySchedule s;
  s.kind = kind;
  s.sigma0_sq = sigma0_sq;
  s.rate = rate;
  s.period_epochs = period_epochs < 1 ? 1 : period_epochs;
  return s;
}

double noise_variance_at(const DecaySchedule& schedule, int epoch) {
  if (epoch < 0) {
    throw std::invalid_argument("noise_variance_at: epoch must be >= 0");
  }
  switch (schedule.kind) {
    case DecayKind::none:
      return schedule.sigma0_sq;
    case DecayKind::linear:
      return schedule.sigma0_sq *
             std::pow(schedule.rate, static_cast<double>(epoch));
    case DecayKind::time:
      return schedule.sigma0_sq /
             (1.0 + schedule.rate * static_cast<double>(epoch));
    case DecayKind::step:
      return schedule.sigma0_sq *
             std::pow(schedule.rate,
                      static_cast<double>(epoch / schedule.period_epochs));
  }
  return schedule.sigma0_sq;
}

ClipSchedule ClipSchedule::make(double z0, double rate, int period_epochs) {
  if (!(z0 > 0.0) || !std::isfinite(z0)) {
    throw std::invalid_argument("ClipSchedule: z0 must be finite and > 0");
  }
  if (!(rate > 0.0 && rate < 1.0)) {
    throw std::invalid_argument("ClipSchedule: rate R must be in (0, 1)");
  }
  if (period_epochs < 1) {
    throw std::invalid_argument("ClipSchedule: period_epochs K must be >= 1");
  }
  return ClipSchedule{z0, rate, period_epochs};
}

double clip_threshold_at(const ClipSchedule& schedule, int epoch) {
  if (epoch < 0) {
    throw std::invalid_argument("clip_threshold_at: epoch must be >= 0");
  }
  return schedule.z0 *
         std::pow(schedule.rate,
                  static_cast<double>(epoch / schedule.period_epochs));
}

int epoch_of_iteration(double sampling_rate, long long t) {
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    throw std::invalid_argument("epoch_of_iteration: sampling_rate must be in (0, 1]");
  }
  if (t < 0) {
    throw std::invalid_argument("epoch_of_iteration: t must be >= 0");
  }
  return static_cast<int>(std::floor(sampling_rate * static_cast<double>(t)));
}

}  // namespace dpdecay
