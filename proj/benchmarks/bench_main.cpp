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

// Microbenchmarks for the hot paths: per-sample gradients, batch clipping,
// noise draws, budget composition and the AUC rank statistic.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "dpdecay/accountant.hpp"
#include "dpdecay/clipping.hpp"
#include "dpdecay/metrics.hpp"
#include "dpdecay/model.hpp"
#include "dpdecay/numerics.hpp"
#include "dpdecay/rng.hpp"
#include "dpdecay/schedules.hpp"

namespace {

using namespace dpdecay;

std::vector<double> random_input(RandomSource& rng, int dim) {
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (double& v : x) v = rng.uniform();
  return x;
}

void BM_PerSampleGradientSoftmax(benchmark::State& state) {
  const Architecture arch = Architecture::softmax_regression(784, 10);
  RandomSource rng(1);
  const ModelState model = ModelState::init(arch, rng);
  const std::vector<double> x = random_input(rng, 784);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        per_sample_gradient(model, LossSpec::make(LossKind::cross_entropy),
                            x, 3));
  }
}
BENCHMARK(BM_PerSampleGradientSoftmax);

void BM_PerSampleGradientMlp(benchmark::State& state) {
  const Architecture arch = Architecture::mlp(784, 64, 10, Activation::relu);
  RandomSource rng(2);
  const ModelState model = ModelState::init(arch, rng);
  const std::vector<double> x = random_input(rng, 784);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        per_sample_gradient(model, LossSpec::make(LossKind::cross_entropy),
                            x, 3));
  }
}
BENCHMARK(BM_PerSampleGradientMlp);

void BM_ScaleBatch(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  RandomSource rng(3);
  std::vector<DenseVector> grads;
  grads.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    DenseVector g(128);
    for (std::size_t j = 0; j < g.dim(); ++j) g[j] = rng.gaussian();
    grads.push_back(g);
  }
  const ClipPolicy policy = ClipPolicy::make(ClipKind::v2, 1.0, 8.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(scale_batch(policy, grads));
  }
}
BENCHMARK(BM_ScaleBatch)->Arg(64)->Arg(256);

void BM_GaussianDraws(benchmark::State& state) {
  RandomSource rng(4);
  for (auto _ : state) {
    double sum = 0.0;
    for (int i = 0; i < 7850; ++i) sum += rng.gaussian();
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_GaussianDraws);

void BM_ComposeBruteforce(benchmark::State& state) {
  const PrivacySpec spec = PrivacySpec::make(
      1.0, 100, 60000, static_cast<int>(state.range(0)),
      DecaySchedule::make(DecayKind::step, 4.0, 0.5, 10), 1e-5, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose_bruteforce(spec));
  }
}
BENCHMARK(BM_ComposeBruteforce)->Arg(100)->Arg(500);

void BM_ComposeClosedForm(benchmark::State& state) {
  const PrivacySpec spec = PrivacySpec::make(
      1.0, 100, 60000, static_cast<int>(state.range(0)),
      DecaySchedule::make(DecayKind::step, 4.0, 0.5, 10), 1e-5, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose_closed_form(spec));
  }
}
BENCHMARK(BM_ComposeClosedForm)->Arg(100)->Arg(500);

void BM_RocAuc(benchmark::State& state) {
  RandomSource rng(5);
  const std::size_t n = 10000;
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = static_cast<int>(rng.next_u64() % 2);
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(roc_auc_binary(scores, labels));
  }
}
BENCHMARK(BM_RocAuc);

}  // namespace

BENCHMARK_MAIN();
