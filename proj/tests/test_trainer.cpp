#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dpdecay/clipping.hpp"
#include "dpdecay/data.hpp"
#include "dpdecay/model.hpp"
#include "dpdecay/rng.hpp"
#include "dpdecay/schedules.hpp"
#include "dpdecay/trainer.hpp"

using dpdecay::Architecture;
using dpdecay::BlobSpec;
using dpdecay::ClipKind;
using dpdecay::ClipPolicy;
using dpdecay::ClipSchedule;
using dpdecay::DecayKind;
using dpdecay::DecaySchedule;
using dpdecay::DenseVector;
using dpdecay::LabeledDataset;
using dpdecay::LossKind;
using dpdecay::LossSpec;
using dpdecay::LrSchedule;
using dpdecay::OptimizerKind;
using dpdecay::RandomSource;
using dpdecay::RunRecord;
using dpdecay::TrainerConfig;

namespace {

LabeledDataset two_blobs(std::size_t per_class, std::uint64_t seed) {
  RandomSource rng(seed);
  return dpdecay::make_synthetic(BlobSpec{4, {per_class, per_class}, 3.0},
                                 rng);
}

TrainerConfig base_config(int epochs, long long batch_size) {
  TrainerConfig config;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.lr = LrSchedule::constant(0.1);
  config.loss = LossSpec::make(LossKind::cross_entropy);
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("poisson sampling keeps indices independently at rate q") {
  RandomSource rng(2023);
  const std::vector<std::size_t> batch = dpdecay::poisson_sample(rng, 10000, 0.1);
  CHECK(batch.size() > 850);
  CHECK(batch.size() < 1150);
  CHECK(std::is_sorted(batch.begin(), batch.end()));
  CHECK(std::adjacent_find(batch.begin(), batch.end()) == batch.end());
  CHECK(batch.back() < 10000);
}

TEST_CASE("poisson sampling at full rate returns every index") {
  RandomSource rng(1);
  const std::vector<std::size_t> batch = dpdecay::poisson_sample(rng, 37, 1.0);
  REQUIRE(batch.size() == 37);
  for (std::size_t i = 0; i < 37; ++i) CHECK(batch[i] == i);
}

TEST_CASE("poisson sampling consumes one uniform per index") {
  RandomSource used(3);
  RandomSource fresh(3);
  dpdecay::poisson_sample(used, 100, 0.3);
  for (int i = 0; i < 100; ++i) fresh.uniform();
  CHECK(used.uniform() == fresh.uniform());
}

TEST_CASE("poisson sampling validates the rate") {
  RandomSource rng(1);
  CHECK_THROWS_AS(dpdecay::poisson_sample(rng, 10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dpdecay::poisson_sample(rng, 10, 1.5), std::invalid_argument);
}

TEST_CASE("one full-batch step descends along the mean gradient") {
  const LabeledDataset data = two_blobs(20, 11);
  const Architecture arch = Architecture::softmax_regression(4, 2);

  // One iteration of plain SGD is linear in the learning rate, so two runs
  // at different rates recover the common starting point by extrapolation.
  TrainerConfig slow = base_config(1, static_cast<long long>(data.size()));
  slow.lr = LrSchedule::constant(0.1);
  TrainerConfig fast = slow;
  fast.lr = LrSchedule::constant(0.2);
  const RunRecord run_slow = dpdecay::train(slow, arch, data, nullptr);
  const RunRecord run_fast = dpdecay::train(fast, arch, data, nullptr);
  REQUIRE(run_slow.total_iterations == 1);

  dpdecay::ModelState start;
  start.arch = arch;
  start.theta = DenseVector(arch.param_count());
  for (std::size_t i = 0; i < start.theta.dim(); ++i) {
    start.theta[i] = 2.0 * run_slow.final_theta[i] - run_fast.final_theta[i];
  }
  std::vector<std::size_t> everyone(data.size());
  for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = i;
  const DenseVector mean_grad = dpdecay::batch_mean_gradient(
      start, slow.loss, data.features, data.labels, everyone);
  for (std::size_t i = 0; i < start.theta.dim(); ++i) {
    const double expected = start.theta[i] - 0.1 * mean_grad[i];
    CHECK(run_slow.final_theta[i] ==
          doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("identical configuration and seed reproduce the run bitwise") {
  const LabeledDataset data = two_blobs(20, 12);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(2, 8);
  config.clip = ClipPolicy::make(ClipKind::dpsgd, 1.0);
  config.noise = DecaySchedule::make(DecayKind::linear, 0.5, 0.9, 1);

  const RunRecord a = dpdecay::train(config, arch, data, nullptr);
  const RunRecord b = dpdecay::train(config, arch, data, nullptr);
  REQUIRE(a.final_theta.dim() == b.final_theta.dim());
  for (std::size_t i = 0; i < a.final_theta.dim(); ++i) {
    CHECK(a.final_theta[i] == b.final_theta[i]);
  }
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].loss == b.iterations[i].loss);
    CHECK(a.iterations[i].batch_size == b.iterations[i].batch_size);
  }

  TrainerConfig reseeded = config;
  reseeded.seed = 8;
  const RunRecord c = dpdecay::train(reseeded, arch, data, nullptr);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.final_theta.dim(); ++i) {
    if (a.final_theta[i] != c.final_theta[i]) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("an unreachable clip bound reproduces nonprivate training bitwise") {
  const LabeledDataset data = two_blobs(20, 13);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig nonprivate = base_config(2, 8);
  TrainerConfig clipped = nonprivate;
  clipped.clip = ClipPolicy::make(ClipKind::dpsgd, 1e12);

  const RunRecord plain = dpdecay::train(nonprivate, arch, data, nullptr);
  const RunRecord huge = dpdecay::train(clipped, arch, data, nullptr);
  REQUIRE(plain.final_theta.dim() == huge.final_theta.dim());
  for (std::size_t i = 0; i < plain.final_theta.dim(); ++i) {
    CHECK(plain.final_theta[i] == huge.final_theta[i]);
  }
}

TEST_CASE("noise injection changes the trajectory") {
  const LabeledDataset data = two_blobs(20, 14);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig quiet = base_config(1, 8);
  quiet.clip = ClipPolicy::make(ClipKind::dpsgd, 1.0);
  TrainerConfig noisy = quiet;
  noisy.noise = DecaySchedule::make(DecayKind::none, 1.0, 1.0, 1);

  const RunRecord a = dpdecay::train(quiet, arch, data, nullptr);
  const RunRecord b = dpdecay::train(noisy, arch, data, nullptr);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.final_theta.dim(); ++i) {
    if (a.final_theta[i] != b.final_theta[i]) any_difference = true;
  }
  CHECK(any_difference);
  CHECK(a.iterations[0].sigma_sq == 0.0);
  CHECK(b.iterations[0].sigma_sq == 1.0);
}

TEST_CASE("empty poisson batches advance time without an update") {
  const LabeledDataset data = two_blobs(25, 15);  // n = 50
  const Architecture arch = Architecture::softmax_regression(4, 2);
  const TrainerConfig config = base_config(1, 1);  // q = 0.02, T = 50
  const RunRecord run = dpdecay::train(config, arch, data, nullptr);
  REQUIRE(run.total_iterations == 50);
  REQUIRE(run.iterations.size() == 50);
  std::size_t empties = 0;
  for (std::size_t i = 0; i < run.iterations.size(); ++i) {
    CHECK(run.iterations[i].t == static_cast<long long>(i));
    if (run.iterations[i].batch_size == 0) {
      ++empties;
      CHECK(run.iterations[i].loss == 0.0);
      CHECK(run.iterations[i].avg_grad_norm == 0.0);
      CHECK(run.iterations[i].discarded == 0);
    }
  }
  // P(empty) ~ 0.36 per iteration; zero empties in 50 draws is implausible
  // and would mean skipped iterations are not being recorded.
  CHECK(empties > 0);
  CHECK(dpdecay::all_finite(run.final_theta));
}

TEST_CASE("recorded noise and threshold trajectories follow the schedules") {
  const LabeledDataset data = two_blobs(20, 16);  // n = 40
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(6, 10);  // q = 0.25, T = 24
  config.clip = ClipPolicy::make(ClipKind::v2, 0.5, 3.0, 1.0);
  config.noise = DecaySchedule::make(DecayKind::step, 4.0, 0.5, 2);
  config.clip_decay = ClipSchedule::make(3.0, 0.5, 2);

  const RunRecord run = dpdecay::train(config, arch, data, nullptr);
  REQUIRE(run.iterations.size() == 24);
  for (const auto& iter : run.iterations) {
    CHECK(iter.epoch == dpdecay::epoch_of_iteration(0.25, iter.t));
    CHECK(iter.sigma_sq == dpdecay::noise_variance_at(*config.noise, iter.epoch));
    CHECK(iter.z == dpdecay::clip_threshold_at(*config.clip_decay, iter.epoch));
  }
  for (std::size_t i = 1; i < run.iterations.size(); ++i) {
    CHECK(run.iterations[i].sigma_sq <= run.iterations[i - 1].sigma_sq);
    CHECK(run.iterations[i].z <= run.iterations[i - 1].z);
  }
  CHECK(run.iterations.front().sigma_sq == 4.0);
  CHECK(run.iterations.back().sigma_sq == 1.0);
  CHECK(run.iterations.front().z == 3.0);
  CHECK(run.iterations.back().z == 0.75);
}

TEST_CASE("each epoch produces exactly one evaluation record") {
  const LabeledDataset data = two_blobs(20, 17);
  const Architecture arch = Architecture::softmax_regression(4, 2);

  for (long long batch : {10LL, 40LL}) {
    const TrainerConfig config = base_config(4, batch);
    const RunRecord run = dpdecay::train(config, arch, data, &data);
    REQUIRE(run.epochs.size() == 4);
    for (int e = 0; e < 4; ++e) {
      CHECK(run.epochs[static_cast<std::size_t>(e)].epoch == e);
      const auto& rec = run.epochs[static_cast<std::size_t>(e)];
      CHECK(rec.test_accuracy >= 0.0);
      CHECK(rec.test_accuracy <= 100.0);
      CHECK(rec.auc >= 0.0);
      CHECK(rec.auc <= 1.0);
      CHECK_FALSE(rec.group_accuracy.empty());
    }
  }
}

TEST_CASE("training without evaluation data records no epoch entries") {
  const LabeledDataset data = two_blobs(10, 18);
  const TrainerConfig config = base_config(2, 10);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  const RunRecord run = dpdecay::train(config, arch, data, nullptr);
  CHECK(run.epochs.empty());
}

TEST_CASE("parameter divergence aborts with a diagnostic") {
  const LabeledDataset data = two_blobs(20, 19);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(2, 40);  // T = 2 full-batch steps
  config.lr = LrSchedule::constant(1e200);
  config.weight_decay = 1.0;
  // Step one lands near -1e200 * gradient (finite); the decoupled decay
  // term then overflows on step two.
  CHECK_THROWS_WITH_AS(dpdecay::train(config, arch, data, nullptr),
                       doctest::Contains("non-finite"), std::runtime_error);
}

TEST_CASE("constant learning rate stays put") {
  const LrSchedule lr = LrSchedule::constant(0.05);
  CHECK(dpdecay::learning_rate_at(lr, 0, 100, 0) == 0.05);
  CHECK(dpdecay::learning_rate_at(lr, 99, 100, 7) == 0.05);
}

TEST_CASE("stepped learning rate halves every period") {
  const LrSchedule lr = LrSchedule::stepped(0.2, 0.5, 10);
  CHECK(dpdecay::learning_rate_at(lr, 0, 1000, 0) == 0.2);
  CHECK(dpdecay::learning_rate_at(lr, 0, 1000, 9) == 0.2);
  CHECK(dpdecay::learning_rate_at(lr, 0, 1000, 10) == 0.1);
  CHECK(dpdecay::learning_rate_at(lr, 0, 1000, 25) == 0.05);
}

TEST_CASE("one-cycle learning rate warms up linearly then decays to zero") {
  const LrSchedule lr = LrSchedule::one_cycle(0.1, 10.0, 0.3);
  // Warm-up spans 30 of 100 iterations.
  CHECK(dpdecay::learning_rate_at(lr, 0, 100, 0) == 0.1);
  CHECK(dpdecay::learning_rate_at(lr, 15, 100, 0) ==
        doctest::Approx(0.55).epsilon(1e-15));
  CHECK(dpdecay::learning_rate_at(lr, 30, 100, 0) == 1.0);
  // Cosine tail: halfway through the remaining 70 iterations sits at half
  // the peak.
  CHECK(dpdecay::learning_rate_at(lr, 65, 100, 0) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(dpdecay::learning_rate_at(lr, 99, 100, 0) <
        dpdecay::learning_rate_at(lr, 65, 100, 0));
  CHECK(dpdecay::learning_rate_at(lr, 99, 100, 0) > 0.0);
}

TEST_CASE("recorded learning rates follow the stepped schedule") {
  const LabeledDataset data = two_blobs(20, 20);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(3, 40);  // T = 3, one step per epoch
  config.lr = LrSchedule::stepped(0.1, 0.5, 1);
  const RunRecord run = dpdecay::train(config, arch, data, nullptr);
  REQUIRE(run.iterations.size() == 3);
  CHECK(run.iterations[0].lr == 0.1);
  CHECK(run.iterations[1].lr == 0.05);
  CHECK(run.iterations[2].lr == 0.025);
}

TEST_CASE("adaptive threshold rises while every gradient clears it") {
  const LabeledDataset data = two_blobs(20, 21);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(1, 4);  // q = 0.1, T = 10
  // Tiny starting threshold: every observed norm exceeds it, so each
  // iteration multiplies z by e^(1 - 0) = e.
  config.clip =
      ClipPolicy::make(ClipKind::global_adapt, 0.01, 0.02, 1.0, 0.01, 0.0);
  config.adapt_noise_scale = 0.0;
  const RunRecord run = dpdecay::train(config, arch, data, nullptr);
  CHECK(run.iterations.front().z == 0.02);
  double previous = 0.0;
  bool grew = false;
  for (const auto& iter : run.iterations) {
    if (iter.batch_size == 0) continue;  // skipped step leaves z in place
    if (previous > 0.0 && iter.z > previous) grew = true;
    if (previous > 0.0) CHECK(iter.z >= previous);
    previous = iter.z;
  }
  CHECK(grew);
}

TEST_CASE("adamw training converges on separable blobs") {
  const LabeledDataset data = two_blobs(40, 22);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(5, 16);
  config.optimizer = OptimizerKind::adamw;
  config.lr = LrSchedule::constant(0.01);
  config.weight_decay = 1e-4;
  const RunRecord run = dpdecay::train(config, arch, data, &data);
  REQUIRE(run.epochs.size() == 5);
  CHECK(run.epochs.back().test_accuracy >= 90.0);
  CHECK(dpdecay::all_finite(run.final_theta));
}

TEST_CASE("trainer validation rejects inconsistent configurations") {
  const LabeledDataset data = two_blobs(10, 23);
  const Architecture arch = Architecture::softmax_regression(4, 2);

  TrainerConfig config = base_config(0, 10);
  CHECK_THROWS_AS(dpdecay::train(config, arch, data, nullptr),
                  std::invalid_argument);
  config = base_config(1, 21);  // batch larger than n = 20
  CHECK_THROWS_AS(dpdecay::train(config, arch, data, nullptr),
                  std::invalid_argument);
  config = base_config(1, 10);
  config.lr.base = 0.0;
  CHECK_THROWS_AS(dpdecay::train(config, arch, data, nullptr),
                  std::invalid_argument);
  config = base_config(1, 10);
  const Architecture wrong_dim = Architecture::softmax_regression(5, 2);
  CHECK_THROWS_AS(dpdecay::train(config, wrong_dim, data, nullptr),
                  std::invalid_argument);
  // Labels 0..2 against a two-class head.
  RandomSource three_rng(29);
  const LabeledDataset three_classes =
      make_synthetic(BlobSpec{4, {7, 7, 6}, 3.0}, three_rng);
  CHECK_THROWS_WITH_AS(dpdecay::train(config, arch, three_classes, nullptr),
                       doctest::Contains("label"), std::invalid_argument);
}

TEST_CASE("trainer refuses a threshold schedule that crosses the bound") {
  const LabeledDataset data = two_blobs(10, 24);
  const Architecture arch = Architecture::softmax_regression(4, 2);
  TrainerConfig config = base_config(10, 10);
  config.clip = ClipPolicy::make(ClipKind::v2, 1.0, 3.0, 1.0);
  // z decays to 3 * 0.5^9 ~ 0.006 by the last epoch, far below c0 = 1.
  config.clip_decay = ClipSchedule::make(3.0, 0.5, 1);
  CHECK_THROWS_WITH_AS(dpdecay::train(config, arch, data, nullptr),
                       doctest::Contains("below c0"), std::invalid_argument);
  // The adaptive kind ignores the schedule and trains through.
  config.clip =
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 3.0, 1.0, 0.01, 0.1);
  config.adapt_noise_scale = 0.0;
  CHECK_NOTHROW(dpdecay::train(config, arch, data, nullptr));
}

TEST_CASE("optimizer and learning-rate names round-trip") {
  for (OptimizerKind k : {OptimizerKind::sgd, OptimizerKind::adamw}) {
    CHECK(dpdecay::optimizer_from_string(dpdecay::to_string(k)) == k);
  }
  for (dpdecay::LrKind k :
       {dpdecay::LrKind::constant, dpdecay::LrKind::step,
        dpdecay::LrKind::one_cycle}) {
    CHECK(dpdecay::lr_kind_from_string(dpdecay::to_string(k)) == k);
  }
  CHECK_THROWS_AS(dpdecay::optimizer_from_string("lbfgs"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dpdecay::lr_kind_from_string("cyclic"),
                  std::invalid_argument);
}
