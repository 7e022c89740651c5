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

#ifndef DPDECAY_TRAINER_HPP_
#define DPDECAY_TRAINER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dpdecay/clipping.hpp"
#include "dpdecay/data.hpp"
#include "dpdecay/model.hpp"
#include "dpdecay/schedules.hpp"

namespace dpdecay {

enum class OptimizerKind { sgd, adamw };

OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

enum class LrKind { constant, step, one_cycle };

LrKind lr_kind_from_string(const std::string& s);
std::string to_string(LrKind k);

// Learning-rate schedule over iterations t = 0..T-1.
//   constant:  base
//   step:      base * decay_rate^floor(epoch / period_epochs)
//   one_cycle: linear warm-up from base to peak_factor * base over the first
//              warmup_fraction of T, then cosine decay to zero.
struct LrSchedule {
  LrKind kind = LrKind::constant;
  double base = 0.1;           // > 0
  double decay_rate = 0.5;     // step; in (0, 1]
  int period_epochs = 10;      // step; >= 1
  double peak_factor = 10.0;   // one_cycle; >= 1
  double warmup_fraction = 0.3;  // one_cycle; in (0, 1)

  static LrSchedule constant(double base);
  static LrSchedule stepped(double base, double decay_rate, int period_epochs);
  static LrSchedule one_cycle(double base, double peak_factor = 10.0,
                              double warmup_fraction = 0.3);
};

double learning_rate_at(const LrSchedule& schedule, long long t,
                        long long total_iterations, int epoch);

// One private training run. Per iteration: Poisson-sample a batch, compute
// per-sample gradients, scale them under the clip policy, sum the
// survivors, add spherical Gaussian noise at the epoch's variance, divide
// by the realized batch size, and step the optimizer. Both `clip` and
// `noise` are optional; with neither set this is ordinary minibatch
// training, which serves as the nonprivate reference.
struct TrainerConfig {
  int epochs = 1;                         // E >= 1
  long long batch_size = 1;               // b >= 1; q = b / n
  OptimizerKind optimizer = OptimizerKind::sgd;
  double weight_decay = 0.0;              // decoupled; >= 0
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LrSchedule lr;
  LossSpec loss;
  std::optional<ClipPolicy> clip;
  std::optional<DecaySchedule> noise;     // absent: zero noise
  // Stepped threshold decay for policies with an upper threshold. Ignored
  // by the adaptive kind, which moves its own threshold.
  std::optional<ClipSchedule> clip_decay;
  double adapt_noise_scale = 1.0;         // global_adapt threshold updates
  std::uint64_t seed = 1;
};

struct IterationRecord {
  long long t = 0;
  int epoch = 0;
  double sigma_sq = 0.0;       // noise variance used this iteration
  double z = 0.0;              // live upper threshold (0 when unused)
  double avg_grad_norm = 0.0;  // mean raw per-sample gradient norm
  double loss = 0.0;           // mean per-sample loss over the batch
  double lr = 0.0;
  std::size_t batch_size = 0;  // realized Poisson batch size
  std::size_t discarded = 0;
};

struct EpochRecord {
  int epoch = 0;
  double test_accuracy = 0.0;           // percent
  std::map<int, double> group_accuracy; // percent
  double auc = 0.0;
};

struct RunRecord {
  std::vector<IterationRecord> iterations;  // length T
  std::vector<EpochRecord> epochs;          // length E when eval data given
  DenseVector final_theta;
  long long total_iterations = 0;
  double sampling_rate = 0.0;
  std::uint64_t seed = 0;
};

// Poisson subsample of {0..n-1}: each index kept independently with
// probability q, in index order. Consumes exactly n uniforms.
std::vector<std::size_t> poisson_sample(RandomSource& rng, std::size_t n,
                                        double q);

// Runs T = round(E / q) iterations and returns the full trace. When
// eval_data is non-null each epoch ends with accuracy / per-group accuracy
// / AUC on it. Aborts with a diagnostic if parameters leave the finite
// range. Identical (config, data, seed) produce identical records.
RunRecord train(const TrainerConfig& config, const Architecture& arch,
                const LabeledDataset& train_data,
                const LabeledDataset* eval_data);

}  // namespace dpdecay

#endif  // DPDECAY_TRAINER_HPP_
