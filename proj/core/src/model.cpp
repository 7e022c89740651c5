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

#include "dpdecay/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpdecay {

namespace {

// Probability floor applied before logarithms.
constexpr double kProbFloor = 1e-12;

// Self-normalizing activation constants.
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
constexpr double kSeluLambda = 1.0507009873554804934193349852946;

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::selu:
      return z > 0.0 ? kSeluLambda * z
                     : kSeluLambda * kSeluAlpha * (std::exp(z) - 1.0);
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::selu:
      return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
  }
  return 1.0;
}

void softmax_inplace(std::vector<double>& logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

// Derivative of the loss w.r.t. the logits, written into dz (size classes).
// Cross-entropy: p - onehot(y). Focal: chain rule through p_y,
//   dL/dp = alpha * gamma * (1-p)^(gamma-1) * ln(p) - alpha * (1-p)^gamma / p
//   dL/dz_k = dL/dp * p_y * ([k == y] - p_k).
void loss_logit_gradient(const LossSpec& loss, const std::vector<double>& probs,
                         int label, std::vector<double>& dz) {
  const std::size_t classes = probs.size();
  dz.assign(classes, 0.0);
  if (loss.kind == LossKind::cross_entropy) {
    for (std::size_t k = 0; k < classes; ++k) {
      dz[k] = probs[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
    }
    return;
  }
  const double p = std::max(probs[static_cast<std::size_t>(label)], kProbFloor);
  const double one_minus = 1.0 - p;
  if (one_minus <= 0.0 && loss.focal_gamma > 0.0) {
    // Perfectly confident correct prediction: the focal factor and its
    // derivative both vanish in the limit.
    return;
  }
  double dLdp;
  if (loss.focal_gamma == 0.0) {
    dLdp = -loss.focal_alpha / p;
  } else {
    dLdp = loss.focal_alpha * loss.focal_gamma *
               std::pow(one_minus, loss.focal_gamma - 1.0) * std::log(p) -
           loss.focal_alpha * std::pow(one_minus, loss.focal_gamma) / p;
  }
  const double p_y = probs[static_cast<std::size_t>(label)];
  for (std::size_t k = 0; k < classes; ++k) {
    const double indicator = static_cast<int>(k) == label ? 1.0 : 0.0;
    dz[k] = dLdp * p_y * (indicator - probs[k]);
  }
}

struct ParamLayout {
  // Offsets into the flattened theta. For softmax regression only w1/b1 are
  // used (w1 = the single weight matrix).
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

ParamLayout layout_of(const Architecture& arch) {
  ParamLayout l;
  const std::size_t d = static_cast<std::size_t>(arch.input_dim);
  const std::size_t c = static_cast<std::size_t>(arch.num_classes);
  if (arch.hidden_dim == 0) {
    l.w1 = 0;
    l.b1 = c * d;
    l.total = c * d + c;
  } else {
    const std::size_t h = static_cast<std::size_t>(arch.hidden_dim);
    l.w1 = 0;
    l.b1 = h * d;
    l.w2 = h * d + h;
    l.b2 = h * d + h + c * h;
    l.total = h * d + h + c * h + c;
  }
  return l;
}

void check_input(const Architecture& arch, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(arch.input_dim)) {
    throw std::invalid_argument("model: feature dimension mismatch");
  }
}

void check_label(const Architecture& arch, int label) {
  if (label < 0 || label >= arch.num_classes) {
    throw std::invalid_argument("model: label out of range");
  }
}

// Forward pass keeping the intermediates backprop needs.
struct ForwardCache {
  std::vector<double> z1;     // hidden pre-activations (mlp only)
  std::vector<double> a1;     // hidden activations (mlp only)
  std::vector<double> probs;  // softmax output
};

void forward_cached(const ModelState& model, std::span<const double> x,
                    ForwardCache& cache) {
  const Architecture& arch = model.arch;
  const ParamLayout l = layout_of(arch);
  const double* theta = model.theta.data();
  const std::size_t d = static_cast<std::size_t>(arch.input_dim);
  const std::size_t c = static_cast<std::size_t>(arch.num_classes);
  if (arch.hidden_dim == 0) {
    cache.probs.assign(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      double z = theta[l.b1 + k];
      const double* row = theta + l.w1 + k * d;
      for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
      cache.probs[k] = z;
    }
    softmax_inplace(cache.probs);
    return;
  }
  const std::size_t h = static_cast<std::size_t>(arch.hidden_dim);
  cache.z1.assign(h, 0.0);
  cache.a1.assign(h, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    double z = theta[l.b1 + i];
    const double* row = theta + l.w1 + i * d;
    for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
    cache.z1[i] = z;
    cache.a1[i] = activate(arch.activation, z);
  }
  cache.probs.assign(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    double z = theta[l.b2 + k];
    const double* row = theta + l.w2 + k * h;
    for (std::size_t i = 0; i < h; ++i) z += row[i] * cache.a1[i];
    cache.probs[k] = z;
  }
  softmax_inplace(cache.probs);
}

// Accumulates scale * d(loss)/d(theta) for one sample into grad.
void accumulate_gradient(const ModelState& model, const LossSpec& loss,
                         std::span<const double> x, int label, double scale,
                         const ForwardCache& cache, double* grad) {
  const Architecture& arch = model.arch;
  const ParamLayout l = layout_of(arch);
  const double* theta = model.theta.data();
  const std::size_t d = static_cast<std::size_t>(arch.input_dim);
  const std::size_t c = static_cast<std::size_t>(arch.num_classes);
  std::vector<double> dz2;
  loss_logit_gradient(loss, cache.probs, label, dz2);
  if (arch.hidden_dim == 0) {
    for (std::size_t k = 0; k < c; ++k) {
      const double g = scale * dz2[k];
      double* row = grad + l.w1 + k * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += g * x[j];
      grad[l.b1 + k] += g;
    }
    return;
  }
  const std::size_t h = static_cast<std::size_t>(arch.hidden_dim);
  std::vector<double> dz1(h, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    const double g = scale * dz2[k];
    double* row = grad + l.w2 + k * h;
    const double* w_row = theta + l.w2 + k * h;
    for (std::size_t i = 0; i < h; ++i) {
      row[i] += g * cache.a1[i];
      dz1[i] += g * w_row[i];
    }
    grad[l.b2 + k] += g;
  }
  for (std::size_t i = 0; i < h; ++i) {
    dz1[i] *= activate_derivative(arch.activation, cache.z1[i]);
    double* row = grad + l.w1 + i * d;
    for (std::size_t j = 0; j < d; ++j) row[j] += dz1[i] * x[j];
    grad[l.b1 + i] += dz1[i];
  }
}

}  // namespace

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "selu") return Activation::selu;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "selu";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "cross_entropy") return LossKind::cross_entropy;
  if (s == "focal") return LossKind::focal;
  throw std::invalid_argument("unknown loss kind: " + s);
}

std::string to_string(LossKind k) {
  return k == LossKind::cross_entropy ? "cross_entropy" : "focal";
}

LossSpec LossSpec::make(LossKind kind, double focal_alpha, double focal_gamma) {
  if (!(focal_alpha > 0.0) || !std::isfinite(focal_alpha)) {
    throw std::invalid_argument("LossSpec: focal_alpha must be finite and > 0");
  }
  if (!(focal_gamma >= 0.0) || !std::isfinite(focal_gamma)) {
    throw std::invalid_argument("LossSpec: focal_gamma must be finite and >= 0");
  }
  return LossSpec{kind, focal_alpha, focal_gamma};
}

Architecture Architecture::softmax_regression(int input_dim, int num_classes) {
  if (input_dim < 1 || num_classes < 2) {
    throw std::invalid_argument(
        "Architecture: need input_dim >= 1 and num_classes >= 2");
  }
  return Architecture{input_dim, num_classes, 0, Activation::relu};
}

Architecture Architecture::mlp(int input_dim, int hidden_dim, int num_classes,
                               Activation activation) {
  if (input_dim < 1 || num_classes < 2 || hidden_dim < 1) {
    throw std::invalid_argument(
        "Architecture: need input_dim >= 1, hidden_dim >= 1, num_classes >= 2");
  }
  return Architecture{input_dim, num_classes, hidden_dim, activation};
}

std::size_t Architecture::param_count() const {
  return layout_of(*this).total;
}

ModelState ModelState::init(const Architecture& arch, RandomSource& rng) {
  const ParamLayout l = layout_of(arch);
  DenseVector theta(l.total);
  const std::size_t d = static_cast<std::size_t>(arch.input_dim);
  const std::size_t c = static_cast<std::size_t>(arch.num_classes);
  auto uniform_pm = [&rng](double bound) {
    return bound * (2.0 * rng.uniform() - 1.0);
  };
  if (arch.hidden_dim == 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < c * d; ++i) theta[l.w1 + i] = uniform_pm(bound);
  } else {
    const std::size_t h = static_cast<std::size_t>(arch.hidden_dim);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t i = 0; i < h * d; ++i) theta[l.w1 + i] = uniform_pm(bound1);
    for (std::size_t i = 0; i < c * h; ++i) theta[l.w2 + i] = uniform_pm(bound2);
  }
  return ModelState{arch, std::move(theta)};
}

std::vector<double> forward(const ModelState& model,
                            std::span<const double> x) {
  check_input(model.arch, x);
  ForwardCache cache;
  forward_cached(model, x, cache);
  return cache.probs;
}

double loss_value(const LossSpec& loss, const std::vector<double>& probs,
                  int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("loss_value: label out of range");
  }
  const double p = std::max(probs[static_cast<std::size_t>(label)], kProbFloor);
  if (loss.kind == LossKind::cross_entropy) {
    return -std::log(p);
  }
  return -loss.focal_alpha * std::pow(1.0 - p, loss.focal_gamma) * std::log(p);
}

DenseVector per_sample_gradient(const ModelState& model, const LossSpec& loss,
                                std::span<const double> x, int label,
                                double* loss_out) {
  check_input(model.arch, x);
  check_label(model.arch, label);
  ForwardCache cache;
  forward_cached(model, x, cache);
  if (loss_out != nullptr) *loss_out = loss_value(loss, cache.probs, label);
  DenseVector grad(model.arch.param_count());
  accumulate_gradient(model, loss, x, label, 1.0, cache, grad.data());
  return grad;
}

DenseVector batch_mean_gradient(const ModelState& model, const LossSpec& loss,
                                const DenseMatrix& features,
                                std::span<const int> labels,
                                const std::vector<std::size_t>& batch,
                                double* mean_loss_out) {
  if (batch.empty()) {
    throw std::invalid_argument("batch_mean_gradient: empty batch");
  }
  DenseVector grad(model.arch.param_count());
  double loss_sum = 0.0;
  ForwardCache cache;
  for (std::size_t idx : batch) {
    const std::span<const double> x = features.row(idx);
    check_input(model.arch, x);
    const int label = labels[idx];
    check_label(model.arch, label);
    forward_cached(model, x, cache);
    loss_sum += loss_value(loss, cache.probs, label);
    accumulate_gradient(model, loss, x, label, 1.0, cache, grad.data());
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  grad.scale(inv);
  if (mean_loss_out != nullptr) *mean_loss_out = loss_sum * inv;
  return grad;
}

int predict(const ModelState& model, std::span<const double> x) {
  const std::vector<double> probs = forward(model, x);
  int best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace dpdecay
