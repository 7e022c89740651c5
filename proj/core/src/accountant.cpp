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

#include "dpdecay/accountant.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dpdecay {

namespace {

// Amplification constant of the subsampled Gaussian query: rho scales as
// 13 h^2 relative to the base query.
constexpr double kAmplification = 13.0;

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

PrivacySpec PrivacySpec::make(double sensitivity, long long batch_size,
                              long long dataset_size, int epochs,
                              const DecaySchedule& schedule, double delta,
                              int extra_queries_per_epoch) {
  require(std::isfinite(sensitivity) && sensitivity >= 0.0,
          "PrivacySpec: sensitivity must be finite and >= 0");
  require(dataset_size >= 1, "PrivacySpec: dataset_size must be >= 1");
  require(batch_size >= 1 && batch_size <= dataset_size,
          "PrivacySpec: batch_size must satisfy 1 <= b <= n");
  require(epochs >= 1, "PrivacySpec: epochs must be >= 1");
  require(delta > 0.0 && delta < 1.0, "PrivacySpec: delta must be in (0, 1)");
  require(extra_queries_per_epoch >= 0,
          "PrivacySpec: extra_queries_per_epoch must be >= 0");
  // Re-validate the schedule so a hand-assembled one cannot slip through.
  DecaySchedule checked = DecaySchedule::make(
      schedule.kind, schedule.sigma0_sq, schedule.rate,
      schedule.period_epochs);
  PrivacySpec spec;
  spec.sensitivity = sensitivity;
  spec.batch_size = batch_size;
  spec.dataset_size = dataset_size;
  spec.epochs = epochs;
  spec.schedule = checked;
  spec.delta = delta;
  spec.extra_queries_per_epoch = extra_queries_per_epoch;
  return spec;
}

double rho_epoch(const PrivacySpec& spec, int epoch) {
  if (epoch < 0 || epoch >= spec.epochs) {
    throw std::invalid_argument("rho_epoch: epoch out of range [0, E)");
  }
  const double q = spec.sampling_rate();
  const double c = spec.sensitivity;
  const double sigma_sq = noise_variance_at(spec.schedule, epoch);
  return kAmplification * q * q * c * c / (2.0 * sigma_sq);
}

double omega_epoch(const PrivacySpec& spec, int epoch) {
  if (epoch < 0 || epoch >= spec.epochs) {
    throw std::invalid_argument("omega_epoch: epoch out of range [0, E)");
  }
  if (spec.batch_size == spec.dataset_size) {
    throw std::invalid_argument(
        "omega_epoch: undefined when batch_size == dataset_size (ln(n/b) = 0)");
  }
  if (spec.sensitivity == 0.0) {
    throw std::invalid_argument("omega_epoch: undefined for zero sensitivity");
  }
  const double c = spec.sensitivity;
  const double sigma_sq = noise_variance_at(spec.schedule, epoch);
  const double log_ratio = std::log(static_cast<double>(spec.dataset_size) /
                                    static_cast<double>(spec.batch_size));
  return log_ratio * sigma_sq / (2.0 * c * c);
}

TcdpBudget compose_bruteforce(const PrivacySpec& spec) {
  const double queries = static_cast<double>(spec.queries_per_epoch());
  double rho_total = 0.0;
  double omega_total = omega_epoch(spec, 0);
  for (int e = 0; e < spec.epochs; ++e) {
    rho_total += queries * rho_epoch(spec, e);
    const double w = omega_epoch(spec, e);
    if (w < omega_total) omega_total = w;
  }
  return TcdpBudget{rho_total, omega_total};
}

TcdpBudget compose_closed_form(const PrivacySpec& spec) {
  if (spec.batch_size == spec.dataset_size) {
    throw std::invalid_argument(
        "compose_closed_form: undefined when batch_size == dataset_size");
  }
  if (spec.sensitivity == 0.0) {
    throw std::invalid_argument(
        "compose_closed_form: undefined for zero sensitivity");
  }
  const double q = spec.sampling_rate();
  const double c = spec.sensitivity;
  const double s0 = spec.schedule.sigma0_sq;
  const double R = spec.schedule.rate;
  const double E = static_cast<double>(spec.epochs);
  const double queries = static_cast<double>(spec.queries_per_epoch());
  const double base = queries * kAmplification * q * q * c * c;
  const double log_ratio = std::log(static_cast<double>(spec.dataset_size) /
                                    static_cast<double>(spec.batch_size));
  const double omega0 = log_ratio * s0 / (2.0 * c * c);

  double rho = 0.0;
  double omega = 0.0;
  switch (spec.schedule.kind) {
    case DecayKind::none: {
      rho = base * E / (2.0 * s0);
      omega = omega0;
      break;
    }
    case DecayKind::linear: {
      const double r_em1 = std::pow(R, E - 1.0);
      const double r_e = std::pow(R, E);
      rho = base * (1.0 - r_e) / (2.0 * s0 * (r_em1 - r_e));
      omega = omega0 * r_em1;
      break;
    }
    case DecayKind::time: {
      // sum over e of (1 + R e) = 2E + R E (E - 1), halved.
      rho = base * (2.0 * E + R * E * (E - 1.0)) / (4.0 * s0);
      omega = omega0 / (1.0 + R * (E - 1.0));
      break;
    }
    case DecayKind::step: {
      const int K = spec.schedule.period_epochs;
      if (spec.epochs % K != 0) {
        std::ostringstream msg;
        msg << "compose_closed_form: step decay requires epochs divisible by "
               "period_epochs (E = " << spec.epochs << ", K = " << K << ")";
        throw std::invalid_argument(msg.str());
      }
      const double P = static_cast<double>(spec.epochs / K);
      const double r_pm1 = std::pow(R, P - 1.0);
      const double r_p = std::pow(R, P);
      rho = base * static_cast<double>(K) * (1.0 - r_p) /
            (2.0 * s0 * (r_pm1 - r_p));
      // The last plateau has the smallest variance, so the binding cutoff is
      // omega0 scaled by R^(P-1); the plateau length K does not enter.
      omega = omega0 * r_pm1;
      break;
    }
  }
  return TcdpBudget{rho, omega};
}

DpConversion tcdp_to_dp(const TcdpBudget& budget, double delta) {
  require(delta > 0.0 && delta < 1.0, "tcdp_to_dp: delta must be in (0, 1)");
  require(std::isfinite(budget.rho) && budget.rho > 0.0,
          "tcdp_to_dp: rho must be finite and > 0");
  const double L = std::log(1.0 / delta);
  DpConversion out;
  out.budget.epsilon = budget.rho + 2.0 * std::sqrt(budget.rho * L);
  out.budget.delta = delta;
  const double side = (budget.omega - 1.0) * (budget.omega - 1.0) * budget.rho;
  if (!(L <= side)) {
    std::ostringstream msg;
    msg << "tcdp_to_dp: delta = " << delta
        << " is below the validity floor exp(-(omega-1)^2 rho) = "
        << std::exp(-side)
        << "; the reported epsilon is a formula extrapolation";
    out.warnings.push_back(msg.str());
  }
  return out;
}

double dp_to_rho(double epsilon, double delta) {
  require(std::isfinite(epsilon) && epsilon > 0.0,
          "dp_to_rho: epsilon must be finite and > 0");
  require(delta > 0.0 && delta < 1.0, "dp_to_rho: delta must be in (0, 1)");
  const double L = std::log(1.0 / delta);
  // (sqrt(L+eps) - sqrt(L))^2 in cancellation-free form.
  const double root = epsilon / (std::sqrt(L + epsilon) + std::sqrt(L));
  return root * root;
}

double solve_sigma0_sq(double epsilon, double delta, const PrivacySpec& spec) {
  const double rho_target = dp_to_rho(epsilon, delta);
  PrivacySpec unit = spec;
  unit.schedule.sigma0_sq = 1.0;
  // rho_total scales as 1/sigma0^2, so the unit-variance total is the
  // numerator of the solve.
  const double rho_unit = compose_closed_form(unit).rho;
  return rho_unit / rho_target;
}

bool AmplificationReport::all_pass() const {
  for (const AmplificationCheck& c : epochs) {
    if (!(c.rho_in_range && c.h_in_range && c.log_bound_ok && c.omega_bound_ok)) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> AmplificationReport::failures() const {
  std::vector<std::string> out;
  for (const AmplificationCheck& c : epochs) {
    std::ostringstream msg;
    msg << "epoch " << c.epoch << ":";
    bool failed = false;
    if (!c.rho_in_range) {
      msg << " base rho = " << c.rho_base << " outside (0, 0.1]";
      failed = true;
    }
    if (!c.h_in_range) {
      msg << " h = " << h << " outside (0, 0.1]";
      failed = true;
    }
    if (!c.log_bound_ok) {
      msg << " ln(1/h) < 3 rho (2 + ln(1/rho))";
      failed = true;
    }
    if (!c.omega_bound_ok) {
      msg << " omega cutoff below ln(1/h)/(2 rho)";
      failed = true;
    }
    if (failed) out.push_back(msg.str());
  }
  return out;
}

AmplificationReport check_amplification_preconditions(const PrivacySpec& spec) {
  const double h = spec.sampling_rate();
  AmplificationReport report;
  report.h = h;
  report.epochs.reserve(static_cast<std::size_t>(spec.epochs));
  const double c = spec.sensitivity;
  const double log_inv_h = -std::log(h);
  for (int e = 0; e < spec.epochs; ++e) {
    const double sigma_sq = noise_variance_at(spec.schedule, e);
    AmplificationCheck check;
    check.epoch = e;
    check.rho_base = c * c / (2.0 * sigma_sq);
    check.rho_in_range = check.rho_base > 0.0 && check.rho_base <= 0.1;
    check.h_in_range = h > 0.0 && h <= 0.1;
    check.log_bound_ok =
        check.rho_base > 0.0 &&
        log_inv_h >=
            3.0 * check.rho_base * (2.0 + std::log(1.0 / check.rho_base));
    // The un-amplified per-epoch query is a plain Gaussian release whose
    // cutoff is unbounded, so the omega precondition cannot bind.
    check.omega_bound_ok = true;
    report.epochs.push_back(check);
  }
  return report;
}

}  // namespace dpdecay
