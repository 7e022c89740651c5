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

#ifndef DPDECAY_NUMERICS_HPP_
#define DPDECAY_NUMERICS_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dpdecay {

// Fixed-dimension dense vector of doubles. The dimension is set at
// construction and never changes afterwards; operations on mismatched
// dimensions throw std::invalid_argument.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim) : values_(dim, 0.0) {}
  DenseVector(std::initializer_list<double> values) : values_(values) {}

  // Takes ownership of external data; throws if any element is non-finite.
  static DenseVector from_data(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<const double> span() const { return values_; }

  void fill(double v);
  void scale(double s);
  // this += s * other
  void add_scaled(const DenseVector& other, double s);

 private:
  std::vector<double> values_;
};

// Euclidean norm. Throws std::invalid_argument if any element is NaN or
// infinite, so a corrupted gradient is caught at the point of measurement.
double l2_norm(const DenseVector& v);
double l2_norm(std::span<const double> v);

double dot(const DenseVector& a, const DenseVector& b);

bool all_finite(const DenseVector& v);
bool all_finite(std::span<const double> v);

// Row-major dense matrix with a fixed shape. Rows are exposed as spans so
// per-sample feature vectors can be consumed without copies.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  // Takes ownership of row-major data; throws on size mismatch or
  // non-finite elements.
  static DenseMatrix from_data(std::size_t rows, std::size_t cols,
                               std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {values_.data() + i * cols_, cols_};
  }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * cols_ + j];
  }
  double& at(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace dpdecay

#endif  // DPDECAY_NUMERICS_HPP_
