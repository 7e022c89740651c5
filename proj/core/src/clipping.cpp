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

#include "dpdecay/clipping.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdecay {

namespace {

// Slack on the sensitivity assertion; covers rounding in norm * gamma.
constexpr double kSensitivitySlack = 1e-12;
// Relative clearance applied when the adaptive threshold is clamped at c0.
constexpr double kThresholdClearance = 1e-6;

}  // namespace

ClipKind clip_kind_from_string(const std::string& s) {
  if (s == "v2") return ClipKind::v2;
  if (s == "dpsgd") return ClipKind::dpsgd;
  if (s == "autos") return ClipKind::autos;
  if (s == "psac") return ClipKind::psac;
  if (s == "global") return ClipKind::global;
  if (s == "global_adapt") return ClipKind::global_adapt;
  throw std::invalid_argument("unknown clip kind: " + s);
}

std::string to_string(ClipKind kind) {
  switch (kind) {
    case ClipKind::v2: return "v2";
    case ClipKind::dpsgd: return "dpsgd";
    case ClipKind::autos: return "autos";
    case ClipKind::psac: return "psac";
    case ClipKind::global: return "global";
    case ClipKind::global_adapt: return "global_adapt";
  }
  return "dpsgd";
}

ClipPolicy ClipPolicy::make(ClipKind kind, double c0, double z, double w,
                            double r, double adapt_target_fraction) {
  if (!(c0 > 0.0) || !std::isfinite(c0)) {
    throw std::invalid_argument("ClipPolicy: c0 must be finite and > 0");
  }
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw std::invalid_argument("ClipPolicy: w must be finite and > 0");
  }
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("ClipPolicy: r must be finite and >= 0");
  }
  if (!(adapt_target_fraction >= 0.0 && adapt_target_fraction < 1.0)) {
    throw std::invalid_argument(
        "ClipPolicy: adapt_target_fraction must be in [0, 1)");
  }
  ClipPolicy p;
  p.kind = kind;
  p.c0 = c0;
  p.z = z;
  p.w = w;
  p.r = r;
  p.adapt_target_fraction = adapt_target_fraction;
  if (p.uses_threshold()) {
    if (!(z > c0) || !std::isfinite(z)) {
      throw std::invalid_argument(
          "ClipPolicy: threshold z must be finite and > c0 for this kind");
    }
  }
  return p;
}

void set_threshold(ClipPolicy& policy, double z) {
  if (!(z > policy.c0) || !std::isfinite(z)) {
    throw std::invalid_argument("set_threshold: z must be finite and > c0");
  }
  policy.z = z;
}

std::optional<double> scale_factor(const ClipPolicy& policy, double norm) {
  if (!(norm >= 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("scale_factor: norm must be finite and >= 0");
  }
  const double c0 = policy.c0;
  switch (policy.kind) {
    case ClipKind::v2: {
      if (norm <= policy.z) return c0 / policy.z;
      return c0 / (norm + policy.w / (norm + policy.w));
    }
    case ClipKind::dpsgd: {
      // Zero-norm gradient is untouched; the sample contributes nothing.
      if (norm == 0.0) return 1.0;
      return std::min(1.0, c0 / norm);
    }
    case ClipKind::autos: {
      const double denom = norm + policy.r;
      // r = 0 with a zero gradient: any factor works, the vector is zero.
      if (denom == 0.0) return 1.0;
      return c0 / denom;
    }
    case ClipKind::psac: {
      return c0 / (norm + policy.w / (norm + policy.w));
    }
    case ClipKind::global: {
      if (norm <= policy.z) return c0 / policy.z;
      return std::nullopt;
    }
    case ClipKind::global_adapt: {
      if (norm <= policy.z) return c0 / policy.z;
      return c0 / norm;
    }
  }
  return 1.0;
}

ScaledBatch scale_batch(const ClipPolicy& policy,
                        const std::vector<DenseVector>& gradients) {
  ScaledBatch out;
  out.raw_norms.reserve(gradients.size());
  out.kept.reserve(gradients.size());
  double norm_sum = 0.0;
  for (const DenseVector& g : gradients) {
    const double norm = l2_norm(g);
    out.raw_norms.push_back(norm);
    norm_sum += norm;
    if (norm > out.max_raw_norm) out.max_raw_norm = norm;
    const std::optional<double> gamma = scale_factor(policy, norm);
    if (!gamma.has_value()) {
      ++out.discarded;
      continue;
    }
    const double scaled_norm = norm * *gamma;
    // Negated form so a NaN factor from a corrupted policy also trips it.
    if (!(scaled_norm <= policy.c0 + kSensitivitySlack)) {
      throw std::logic_error("scale_batch: sensitivity bound violated");
    }
    DenseVector scaled = g;
    scaled.scale(*gamma);
    out.kept.push_back(std::move(scaled));
  }
  out.mean_raw_norm =
      gradients.empty() ? 0.0 : norm_sum / static_cast<double>(gradients.size());
  return out;
}

double adapt_threshold(ClipPolicy& policy,
                       const std::vector<double>& raw_norms,
                       double noise_scale, RandomSource& rng) {
  if (policy.kind != ClipKind::global_adapt) {
    throw std::invalid_argument(
        "adapt_threshold: policy kind must be global_adapt");
  }
  if (raw_norms.empty()) return policy.z;
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw std::invalid_argument(
        "adapt_threshold: noise_scale must be finite and >= 0");
  }
  std::size_t above = 0;
  for (double n : raw_norms) {
    if (n > policy.z) ++above;
  }
  const double batch = static_cast<double>(raw_norms.size());
  const double fraction = static_cast<double>(above) / batch;
  double noise = 0.0;
  if (noise_scale > 0.0) noise = noise_scale * rng.gaussian();
  const double noisy = fraction + noise / batch;
  double z = policy.z * std::exp(noisy - policy.adapt_target_fraction);
  if (!std::isfinite(z)) {
    throw std::runtime_error("adapt_threshold: threshold diverged to non-finite");
  }
  if (z <= policy.c0) {
    z = policy.c0 * (1.0 + kThresholdClearance);
  }
  policy.z = z;
  return z;
}

}  // namespace dpdecay
