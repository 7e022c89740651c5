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

#include "dpdecay/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdecay {

DenseVector DenseVector::from_data(std::vector<double> values) {
  DenseVector v;
  v.values_ = std::move(values);
  if (!all_finite(v)) {
    throw std::invalid_argument("DenseVector::from_data: non-finite element");
  }
  return v;
}

void DenseVector::fill(double v) {
  for (double& x : values_) x = v;
}

void DenseVector::scale(double s) {
  for (double& x : values_) x *= s;
}

void DenseVector::add_scaled(const DenseVector& other, double s) {
  if (other.dim() != dim()) {
    throw std::invalid_argument("DenseVector::add_scaled: dimension mismatch");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += s * other.values_[i];
  }
}

double l2_norm(std::span<const double> v) {
  double sum_sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("l2_norm: non-finite element");
    }
    sum_sq += x * x;
  }
  return std::sqrt(sum_sq);
}

double l2_norm(const DenseVector& v) { return l2_norm(v.span()); }

double dot(const DenseVector& a, const DenseVector& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("dot: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a[i] * b[i];
  return sum;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(const DenseVector& v) { return all_finite(v.span()); }

DenseMatrix DenseMatrix::from_data(std::size_t rows, std::size_t cols,
                                   std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix::from_data: size mismatch");
  }
  if (!all_finite(std::span<const double>(values))) {
    throw std::invalid_argument("DenseMatrix::from_data: non-finite element");
  }
  DenseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.values_ = std::move(values);
  return m;
}

}  // namespace dpdecay
