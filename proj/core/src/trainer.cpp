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

#include "dpdecay/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dpdecay/metrics.hpp"

namespace dpdecay {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// Child stream ids; fixed so the consumers stay decoupled no matter how
// much randomness each one draws.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kAdaptStream = 3;

void validate_config(const TrainerConfig& config, const Architecture& arch,
                     const LabeledDataset& data) {
  if (config.epochs < 1) {
    throw std::invalid_argument("train: epochs must be >= 1");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("train: empty training set");
  }
  if (config.batch_size < 1 ||
      config.batch_size > static_cast<long long>(data.size())) {
    throw std::invalid_argument("train: batch_size must satisfy 1 <= b <= n");
  }
  if (data.dim() != static_cast<std::size_t>(arch.input_dim)) {
    throw std::invalid_argument("train: feature dimension mismatch");
  }
  for (int label : data.labels) {
    if (label < 0 || label >= arch.num_classes) {
      throw std::invalid_argument("train: label out of model range");
    }
  }
  if (!(config.lr.base > 0.0)) {
    throw std::invalid_argument("train: lr.base must be > 0");
  }
  if (!(config.lr.decay_rate > 0.0 && config.lr.decay_rate <= 1.0)) {
    throw std::invalid_argument("train: lr.decay_rate must be in (0, 1]");
  }
  if (config.lr.period_epochs < 1) {
    throw std::invalid_argument("train: lr.period_epochs must be >= 1");
  }
  if (!(config.lr.peak_factor >= 1.0)) {
    throw std::invalid_argument("train: lr.peak_factor must be >= 1");
  }
  if (!(config.lr.warmup_fraction > 0.0 && config.lr.warmup_fraction < 1.0)) {
    throw std::invalid_argument("train: lr.warmup_fraction must be in (0, 1)");
  }
  if (!(config.weight_decay >= 0.0)) {
    throw std::invalid_argument("train: weight_decay must be >= 0");
  }
  if (!(config.adam_beta1 >= 0.0 && config.adam_beta1 < 1.0) ||
      !(config.adam_beta2 >= 0.0 && config.adam_beta2 < 1.0) ||
      !(config.adam_epsilon > 0.0)) {
    throw std::invalid_argument("train: bad adam parameters");
  }
  if (config.clip.has_value() && config.clip_decay.has_value() &&
      config.clip->uses_threshold() &&
      config.clip->kind != ClipKind::global_adapt) {
    // Fail fast if the threshold schedule would cross below c0 during the
    // run; the policy invariant z > c0 must hold at every epoch.
    const double z_last =
        clip_threshold_at(*config.clip_decay, config.epochs - 1);
    if (!(z_last > config.clip->c0)) {
      throw std::invalid_argument(
          "train: clip_decay drives threshold z below c0 before the final "
          "epoch");
    }
  }
}

struct OptimizerState {
  DenseVector m;
  DenseVector v;
  long long steps = 0;
};

void apply_update(const TrainerConfig& config, ModelState& model,
                  OptimizerState& opt, const DenseVector& grad, double lr) {
  const std::size_t dim = model.theta.dim();
  if (config.optimizer == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < dim; ++i) {
      model.theta[i] -= lr * (grad[i] + config.weight_decay * model.theta[i]);
    }
    return;
  }
  ++opt.steps;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 =
      1.0 - std::pow(b1, static_cast<double>(opt.steps));
  const double correction2 =
      1.0 - std::pow(b2, static_cast<double>(opt.steps));
  for (std::size_t i = 0; i < dim; ++i) {
    opt.m[i] = b1 * opt.m[i] + (1.0 - b1) * grad[i];
    opt.v[i] = b2 * opt.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = opt.m[i] / correction1;
    const double v_hat = opt.v[i] / correction2;
    model.theta[i] -=
        lr * (m_hat / (std::sqrt(v_hat) + config.adam_epsilon) +
              config.weight_decay * model.theta[i]);
  }
}

EpochRecord evaluate_epoch(const ModelState& model,
                           const LabeledDataset& eval_data, int epoch) {
  const std::size_t n = eval_data.size();
  std::vector<int> predictions(n);
  std::vector<std::vector<double>> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = forward(model, eval_data.features.row(i));
    int best = 0;
    for (std::size_t k = 1; k < probs[i].size(); ++k) {
      if (probs[i][k] > probs[i][static_cast<std::size_t>(best)]) {
        best = static_cast<int>(k);
      }
    }
    predictions[i] = best;
  }
  EpochRecord record;
  record.epoch = epoch;
  record.test_accuracy = overall_accuracy(predictions, eval_data.labels);
  record.group_accuracy =
      group_accuracy(predictions, eval_data.labels, eval_data.groups);
  if (model.arch.num_classes == 2) {
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = probs[i][1];
    record.auc = roc_auc_binary(scores, eval_data.labels);
  } else {
    record.auc = roc_auc_ovr_macro(probs, eval_data.labels);
  }
  return record;
}

}  // namespace

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adamw") return OptimizerKind::adamw;
  throw std::invalid_argument("unknown optimizer: " + s);
}

std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adamw";
}

LrKind lr_kind_from_string(const std::string& s) {
  if (s == "constant") return LrKind::constant;
  if (s == "step") return LrKind::step;
  if (s == "one_cycle") return LrKind::one_cycle;
  throw std::invalid_argument("unknown lr schedule: " + s);
}

std::string to_string(LrKind k) {
  switch (k) {
    case LrKind::constant: return "constant";
    case LrKind::step: return "step";
    case LrKind::one_cycle: return "one_cycle";
  }
  return "constant";
}

LrSchedule LrSchedule::constant(double base) {
  LrSchedule s;
  s.kind = LrKind::constant;
  s.base = base;
  return s;
}

LrSchedule LrSchedule::stepped(double base, double decay_rate,
                               int period_epochs) {
  LrSchedule s;
  s.kind = LrKind::step;
  s.base = base;
  s.decay_rate = decay_rate;
  s.period_epochs = period_epochs;
  return s;
}

LrSchedule LrSchedule::one_cycle(double base, double peak_factor,
                                 double warmup_fraction) {
  LrSchedule s;
  s.kind = LrKind::one_cycle;
  s.base = base;
  s.peak_factor = peak_factor;
  s.warmup_fraction = warmup_fraction;
  return s;
}

double learning_rate_at(const LrSchedule& schedule, long long t,
                        long long total_iterations, int epoch) {
  switch (schedule.kind) {
    case LrKind::constant:
      return schedule.base;
    case LrKind::step:
      return schedule.base *
             std::pow(schedule.decay_rate,
                      static_cast<double>(epoch / schedule.period_epochs));
    case LrKind::one_cycle: {
      const long long warm = static_cast<long long>(
          schedule.warmup_fraction * static_cast<double>(total_iterations));
      const double peak = schedule.peak_factor * schedule.base;
      if (t < warm) {
        const double progress =
            static_cast<double>(t) / static_cast<double>(warm);
        return schedule.base + (peak - schedule.base) * progress;
      }
      const long long tail = total_iterations - warm;
      if (tail <= 0) return peak;
      const double progress =
          static_cast<double>(t - warm) / static_cast<double>(tail);
      return peak * 0.5 * (1.0 + std::cos(kPi * progress));
    }
  }
  return schedule.base;
}

std::vector<std::size_t> poisson_sample(RandomSource& rng, std::size_t n,
                                        double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("poisson_sample: q must be in (0, 1]");
  }
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(q * static_cast<double>(n) * 1.5) + 8);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < q) batch.push_back(i);
  }
  return batch;
}

RunRecord train(const TrainerConfig& config, const Architecture& arch,
                const LabeledDataset& train_data,
                const LabeledDataset* eval_data) {
  validate_config(config, arch, train_data);

  const std::size_t n = train_data.size();
  const double q = static_cast<double>(config.batch_size) /
                   static_cast<double>(n);
  const long long T = std::llround(static_cast<double>(config.epochs) *
                                   static_cast<double>(n) /
                                   static_cast<double>(config.batch_size));

  RandomSource root(config.seed);
  RandomSource init_rng = root.child(kInitStream);
  RandomSource sample_rng = root.child(kSampleStream);
  RandomSource noise_rng = root.child(kNoiseStream);
  RandomSource adapt_rng = root.child(kAdaptStream);

  ModelState model = ModelState::init(arch, init_rng);
  const std::size_t dim = model.theta.dim();

  OptimizerState opt;
  if (config.optimizer == OptimizerKind::adamw) {
    opt.m = DenseVector(dim);
    opt.v = DenseVector(dim);
  }

  std::optional<ClipPolicy> policy = config.clip;

  RunRecord record;
  record.total_iterations = T;
  record.sampling_rate = q;
  record.seed = config.seed;
  record.iterations.reserve(static_cast<std::size_t>(T));

  int current_epoch = 0;
  std::vector<DenseVector> gradients;
  for (long long t = 0; t < T; ++t) {
    int e = epoch_of_iteration(q, t);
    if (e > config.epochs - 1) e = config.epochs - 1;

    if (e > current_epoch) {
      // Close out every epoch the boundary crossed.
      for (int finished = current_epoch; finished < e; ++finished) {
        if (eval_data != nullptr) {
          record.epochs.push_back(evaluate_epoch(model, *eval_data, finished));
        }
      }
      current_epoch = e;
    }

    // Refresh the scheduled upper threshold at the current epoch. The
    // adaptive kind owns its threshold and is left alone.
    if (policy.has_value() && policy->uses_threshold() &&
        policy->kind != ClipKind::global_adapt &&
        config.clip_decay.has_value()) {
      set_threshold(*policy, clip_threshold_at(*config.clip_decay, e));
    }

    const double sigma_sq =
        config.noise.has_value() ? noise_variance_at(*config.noise, e) : 0.0;

    IterationRecord iter;
    iter.t = t;
    iter.epoch = e;
    iter.sigma_sq = sigma_sq;
    iter.z = policy.has_value() && policy->uses_threshold() ? policy->z : 0.0;
    iter.lr = learning_rate_at(config.lr, t, T, e);

    const std::vector<std::size_t> batch = poisson_sample(sample_rng, n, q);
    iter.batch_size = batch.size();
    if (batch.empty()) {
      // Nothing sampled: the step is skipped but time still advances.
      record.iterations.push_back(iter);
      continue;
    }

    gradients.clear();
    gradients.reserve(batch.size());
    double loss_sum = 0.0;
    for (std::size_t idx : batch) {
      double sample_loss = 0.0;
      gradients.push_back(per_sample_gradient(model, config.loss,
                                              train_data.features.row(idx),
                                              train_data.labels[idx],
                                              &sample_loss));
      loss_sum += sample_loss;
    }
    iter.loss = loss_sum / static_cast<double>(batch.size());

    DenseVector aggregate(dim);
    std::vector<double> raw_norms;
    if (policy.has_value()) {
      ScaledBatch scaled = scale_batch(*policy, gradients);
      iter.discarded = scaled.discarded;
      iter.avg_grad_norm = scaled.mean_raw_norm;
      raw_norms = std::move(scaled.raw_norms);
      for (const DenseVector& g : scaled.kept) aggregate.add_scaled(g, 1.0);
    } else {
      double norm_sum = 0.0;
      for (const DenseVector& g : gradients) {
        norm_sum += l2_norm(g);
        aggregate.add_scaled(g, 1.0);
      }
      iter.avg_grad_norm = norm_sum / static_cast<double>(gradients.size());
    }

    if (sigma_sq > 0.0) {
      const DenseVector noise = gaussian_noise(noise_rng, dim, sigma_sq);
      aggregate.add_scaled(noise, 1.0);
    }
    // Averaging divides by the realized batch size, discarded samples
    // included; a discard mutes a contribution, it does not shrink the
    // denominator.
    aggregate.scale(1.0 / static_cast<double>(batch.size()));

    apply_update(config, model, opt, aggregate, iter.lr);

    if (policy.has_value() && policy->kind == ClipKind::global_adapt) {
      adapt_threshold(*policy, raw_norms, config.adapt_noise_scale, adapt_rng);
    }

    if (!all_finite(model.theta)) {
      std::ostringstream msg;
      msg << "train: parameters became non-finite at iteration t = " << t
          << " (epoch " << e << ", lr " << iter.lr << ", sigma^2 " << sigma_sq
          << ")";
      throw std::runtime_error(msg.str());
    }
    record.iterations.push_back(iter);
  }

  if (eval_data != nullptr) {
    for (int finished = current_epoch; finished < config.epochs; ++finished) {
      record.epochs.push_back(evaluate_epoch(model, *eval_data, finished));
    }
  }
  record.final_theta = std::move(model.theta);
  return record;
}

}  // namespace dpdecay
