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

#ifndef DPDECAY_ACCOUNTANT_HPP_
#define DPDECAY_ACCOUNTANT_HPP_

#include <string>
#include <vector>

#include "dpdecay/schedules.hpp"

namespace dpdecay {

// Everything the privacy ledger needs to price a training run. One Gaussian
// query per epoch is charged at sampling rate q = b/n; mechanisms that spend
// additional noise (e.g. a privatized threshold-update statistic) declare it
// through extra_queries_per_epoch.
struct PrivacySpec {
  double sensitivity = 1.0;      // C >= 0; per-sample contribution bound
  long long batch_size = 1;      // b, 1 <= b <= n
  long long dataset_size = 1;    // n
  int epochs = 1;                // E >= 1
  DecaySchedule schedule;        // noise variance sigma_e^2 per epoch
  double delta = 1e-5;           // in (0, 1)
  int extra_queries_per_epoch = 0;

  static PrivacySpec make(double sensitivity, long long batch_size,
                          long long dataset_size, int epochs,
                          const DecaySchedule& schedule, double delta,
                          int extra_queries_per_epoch = 0);

  double sampling_rate() const {
    return static_cast<double>(batch_size) /
           static_cast<double>(dataset_size);
  }
  int queries_per_epoch() const { return 1 + extra_queries_per_epoch; }
};

struct TcdpBudget {
  double rho = 0.0;
  double omega = 0.0;
};

struct DpBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct DpConversion {
  DpBudget budget;
  // Non-fatal diagnostics, e.g. the conversion's validity floor on delta
  // was not met. The epsilon value is still reported.
  std::vector<std::string> warnings;
};

// Privacy charge of one Gaussian query in epoch e (amplified by subsampling):
//   rho_e = 13 q^2 C^2 / (2 sigma_e^2).
// Zero sensitivity prices at zero.
double rho_epoch(const PrivacySpec& spec, int epoch);

// Tail-cutoff parameter of the subsampled query in epoch e:
//   omega_e = ln(n/b) sigma_e^2 / (2 C^2).
// Undefined (throws) when b == n, since ln(n/b) = 0 leaves no valid cutoff,
// and when C == 0.
double omega_epoch(const PrivacySpec& spec, int epoch);

// Composition over epochs e = 0..E-1 by direct summation: total rho is the
// sum of per-epoch charges (times queries per epoch), total omega the
// minimum cutoff. This is the reference path the closed forms must match.
TcdpBudget compose_bruteforce(const PrivacySpec& spec);

// Closed-form equivalents of compose_bruteforce, one per decay kind.
// Step decay requires E divisible by K and throws otherwise, naming the
// divisibility requirement.
TcdpBudget compose_closed_form(const PrivacySpec& spec);

// (rho, omega)-tCDP to (epsilon, delta)-DP:
//   epsilon = rho + 2 sqrt(rho * ln(1/delta)).
// The conversion is valid when delta >= exp(-(omega-1)^2 rho); a violation
// attaches a warning rather than failing, since the formula still evaluates.
DpConversion tcdp_to_dp(const TcdpBudget& budget, double delta);

// Inverse of the conversion above at fixed delta:
//   rho = (sqrt(L + epsilon) - sqrt(L))^2,  L = ln(1/delta).
// Requires epsilon > 0.
double dp_to_rho(double epsilon, double delta);

// Smallest starting variance sigma0^2 whose closed-form composition meets
// the (epsilon, delta) target. The schedule's sigma0_sq field in `spec` is
// ignored; total rho scales as 1/sigma0^2 so the solve is a single division.
double solve_sigma0_sq(double epsilon, double delta, const PrivacySpec& spec);

// Subsampled-amplification preconditions, evaluated per epoch with h := q
// against the un-amplified per-epoch query (rho_base = C^2 / (2 sigma_e^2)):
//   1. rho_base in (0, 0.1] and h in (0, 0.1]
//   2. ln(1/h) >= 3 rho_base (2 + ln(1/rho_base))
//   3. omega of the un-amplified query >= ln(1/h) / (2 rho_base); a plain
//      Gaussian query has an unbounded cutoff, so this one always holds and
//      is reported for completeness.
// Failures are advisory: they mark epochs where the amplified charge is a
// formula extrapolation, they never block accounting.
struct AmplificationCheck {
  int epoch = 0;
  double rho_base = 0.0;
  bool rho_in_range = false;
  bool h_in_range = false;
  bool log_bound_ok = false;
  bool omega_bound_ok = true;
};

struct AmplificationReport {
  double h = 0.0;
  std::vector<AmplificationCheck> epochs;

  bool all_pass() const;
  std::vector<std::string> failures() const;
};

AmplificationReport check_amplification_preconditions(const PrivacySpec& spec);

}  // namespace dpdecay

#endif  // DPDECAY_ACCOUNTANT_HPP_
