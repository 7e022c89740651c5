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

#ifndef DPDECAY_DATA_HPP_
#define DPDECAY_DATA_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "dpdecay/numerics.hpp"
#include "dpdecay/rng.hpp"

namespace dpdecay {

// In-memory classification dataset. Labels are dense 0..num_classes-1;
// groups default to the labels and drive the fairness metrics.
struct LabeledDataset {
  DenseMatrix features;            // n x d
  std::vector<int> labels;         // n
  std::vector<int> groups;         // n
  int num_classes = 0;
  // Original image shape when the source was an idx file (0 otherwise);
  // write_idx needs it to reproduce the header.
  int idx_rows = 0;
  int idx_cols = 0;
  // new label -> original label value, when the source required remapping.
  std::vector<long long> label_mapping;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

// Reads an idx image/label file pair (optionally gzip-compressed, detected
// by magic bytes). Pixels are scaled to [0, 1] by division by 255. Throws
// on bad magic numbers, truncated payloads, or mismatched counts.
LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path);

// Writes the dataset back as uncompressed idx files. Inverse of load_idx:
// load_idx followed by write_idx reproduces the uncompressed input
// byte-for-byte. Features must lie in [0, 1]; labels in [0, 255].
void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path);

// Reads a CSV with a header row; every column except label_column is a
// numeric feature. Distinct label values are remapped to dense indices in
// ascending order and the mapping is recorded on the dataset. Throws on a
// missing label column or a non-numeric cell, naming the row and column.
LabeledDataset load_csv(const std::string& path,
                        const std::string& label_column);

// Independently keeps each minority-class sample with the probability that
// makes the expected minority share of the result equal `fraction`;
// non-minority rows are untouched and row order is preserved. fraction must
// be in (0, 1]; fraction == 1 keeps everything (the share equation has no
// solution there, so it degenerates to a no-op). Throws if the class is
// absent or its share is already below the target.
LabeledDataset make_unbalanced(const LabeledDataset& dataset,
                               int minority_class, double fraction,
                               RandomSource& rng);

// Gaussian blob generator. Class c is centered at
// separation * (1 + floor(c/dims)) * e_{c mod dims} with unit isotropic
// noise, so pairwise center distances grow with `separation`.
struct BlobSpec {
  int dims = 2;
  std::vector<std::size_t> per_class_counts;
  double separation = 2.0;
};

LabeledDataset make_synthetic(const BlobSpec& spec, RandomSource& rng);

}  // namespace dpdecay

#endif  // DPDECAY_DATA_HPP_
