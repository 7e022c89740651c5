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

#ifndef DPDECAY_MODEL_HPP_
#define DPDECAY_MODEL_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpdecay/numerics.hpp"
#include "dpdecay/rng.hpp"

namespace dpdecay {

enum class Activation { relu, selu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

enum class LossKind { cross_entropy, focal };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

// Loss on predicted class probabilities. Focal loss down-weights easy
// examples:  -alpha * (1 - p_y)^gamma * ln(p_y), with p_y floored at 1e-12
// before the log. gamma = 0, alpha = 1 reduces exactly to cross-entropy.
struct LossSpec {
  LossKind kind = LossKind::cross_entropy;
  double focal_alpha = 1.0;  // > 0
  double focal_gamma = 2.0;  // >= 0

  static LossSpec make(LossKind kind, double focal_alpha = 1.0,
                       double focal_gamma = 2.0);
};

// hidden_dim == 0 selects plain softmax regression; otherwise a single
// hidden layer of that width with the chosen activation feeds the softmax.
struct Architecture {
  int input_dim = 0;
  int num_classes = 0;
  int hidden_dim = 0;
  Activation activation = Activation::relu;

  static Architecture softmax_regression(int input_dim, int num_classes);
  static Architecture mlp(int input_dim, int hidden_dim, int num_classes,
                          Activation activation);

  std::size_t param_count() const;
};

// Flattened parameters. Layout, in order:
//   softmax regression: W (classes x input, row-major), b (classes)
//   mlp:                W1 (hidden x input), b1 (hidden),
//                       W2 (classes x hidden), b2 (classes)
struct ModelState {
  Architecture arch;
  DenseVector theta;

  // Weights drawn uniformly from (-1/sqrt(fan_in), 1/sqrt(fan_in)) per
  // layer, biases zero. Same seed, same initial point.
  static ModelState init(const Architecture& arch, RandomSource& rng);
};

// Class probabilities for one sample; max-subtracted softmax, entries sum
// to 1 within 1e-12.
std::vector<double> forward(const ModelState& model,
                            std::span<const double> x);

// Loss of one (probabilities, label) pair under the given loss kind.
double loss_value(const LossSpec& loss, const std::vector<double>& probs,
                  int label);

// Flattened d(loss)/d(theta) for one sample. When loss_out is non-null the
// sample's loss is stored there, sharing the forward pass.
DenseVector per_sample_gradient(const ModelState& model, const LossSpec& loss,
                                std::span<const double> x, int label,
                                double* loss_out = nullptr);

// Gradient of the mean loss over the index set, accumulated in one buffer.
// Mathematically the mean of per_sample_gradient outputs; kept as a distinct
// accumulation route so the two can be cross-checked.
DenseVector batch_mean_gradient(const ModelState& model, const LossSpec& loss,
                                const DenseMatrix& features,
                                std::span<const int> labels,
                                const std::vector<std::size_t>& batch,
                                double* mean_loss_out = nullptr);

// Argmax class; ties break toward the lower index.
int predict(const ModelState& model, std::span<const double> x);

}  // namespace dpdecay

#endif  // DPDECAY_MODEL_HPP_
