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

#include "dpdecay/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dpdecay {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

bool looks_gzipped(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& bytes,
                                  const std::string& path) {
  z_stream strm{};
  // 15 + 32: accept both zlib and gzip wrappers.
  if (inflateInit2(&strm, 15 + 32) != Z_OK) {
    throw std::runtime_error("zlib init failed for " + path);
  }
  std::vector<unsigned char> out;
  out.reserve(bytes.size() * 4);
  std::vector<unsigned char> chunk(1 << 16);
  strm.next_in = const_cast<unsigned char*>(bytes.data());
  strm.avail_in = static_cast<uInt>(bytes.size());
  int ret = Z_OK;
  do {
    strm.next_out = chunk.data();
    strm.avail_out = static_cast<uInt>(chunk.size());
    ret = inflate(&strm, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&strm);
      throw std::runtime_error("corrupt gzip stream in " + path);
    }
    out.insert(out.end(), chunk.data(),
               chunk.data() + (chunk.size() - strm.avail_out));
  } while (ret != Z_STREAM_END);
  inflateEnd(&strm);
  return out;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw std::runtime_error("truncated idx header in " + path);
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>((v >> 24) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>(v & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  std::vector<unsigned char> img = read_file(images_path);
  if (looks_gzipped(img)) img = gunzip(img, images_path);
  std::vector<unsigned char> lab = read_file(labels_path);
  if (looks_gzipped(lab)) lab = gunzip(lab, labels_path);

  if (read_be32(img, 0, images_path) != kImagesMagic) {
    throw std::runtime_error("bad image magic in " + images_path);
  }
  if (read_be32(lab, 0, labels_path) != kLabelsMagic) {
    throw std::runtime_error("bad label magic in " + labels_path);
  }
  const std::uint32_t n_img = read_be32(img, 4, images_path);
  const std::uint32_t rows = read_be32(img, 8, images_path);
  const std::uint32_t cols = read_be32(img, 12, images_path);
  const std::uint32_t n_lab = read_be32(lab, 4, labels_path);
  if (n_img != n_lab) {
    throw std::runtime_error("image/label count mismatch: " + images_path);
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (img.size() != 16 + static_cast<std::size_t>(n_img) * pixels) {
    throw std::runtime_error("truncated image payload in " + images_path);
  }
  if (lab.size() != 8 + static_cast<std::size_t>(n_lab)) {
    throw std::runtime_error("truncated label payload in " + labels_path);
  }

  std::vector<double> features(static_cast<std::size_t>(n_img) * pixels);
  for (std::size_t i = 0; i < features.size(); ++i) {
    features[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  LabeledDataset d;
  d.features = DenseMatrix::from_data(n_img, pixels, std::move(features));
  d.labels.resize(n_lab);
  int max_label = 0;
  for (std::size_t i = 0; i < n_lab; ++i) {
    d.labels[i] = static_cast<int>(lab[8 + i]);
    max_label = std::max(max_label, d.labels[i]);
  }
  d.groups = d.labels;
  d.num_classes = max_label + 1;
  d.idx_rows = static_cast<int>(rows);
  d.idx_cols = static_cast<int>(cols);
  return d;
}

void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path) {
  int rows = dataset.idx_rows;
  int cols = dataset.idx_cols;
  if (rows == 0 || cols == 0) {
    // Dataset did not come from idx; emit each sample as a single row.
    rows = 1;
    cols = static_cast<int>(dataset.dim());
  }
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) !=
      dataset.dim()) {
    throw std::invalid_argument("write_idx: image shape does not match dim");
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot write file: " + images_path);
  write_be32(img, kImagesMagic);
  write_be32(img, static_cast<std::uint32_t>(dataset.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const std::span<const double> row = dataset.features.row(i);
    for (double v : row) {
      const long pixel = std::lround(v * 255.0);
      if (pixel < 0 || pixel > 255) {
        throw std::invalid_argument("write_idx: feature outside [0, 1]");
      }
      const unsigned char byte = static_cast<unsigned char>(pixel);
      img.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot write file: " + labels_path);
  write_be32(lab, kLabelsMagic);
  write_be32(lab, static_cast<std::uint32_t>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int original =
        dataset.label_mapping.empty()
            ? dataset.labels[i]
            : static_cast<int>(dataset.label_mapping[static_cast<std::size_t>(
                  dataset.labels[i])]);
    if (original < 0 || original > 255) {
      throw std::invalid_argument("write_idx: label outside [0, 255]");
    }
    const unsigned char byte = static_cast<unsigned char>(original);
    lab.write(reinterpret_cast<const char*>(&byte), 1);
  }
}

LabeledDataset load_csv(const std::string& path,
                        const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty csv: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> headers;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) headers.push_back(cell);
  }
  std::ptrdiff_t label_idx = -1;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (headers[i] == label_column) {
      label_idx = static_cast<std::ptrdiff_t>(i);
      break;
    }
  }
  if (label_idx < 0) {
    throw std::runtime_error("label column '" + label_column +
                             "' not found in " + path);
  }
  const std::size_t feature_dim = headers.size() - 1;
  std::vector<double> features;
  std::vector<long long> raw_labels;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      if (static_cast<std::ptrdiff_t>(col) == label_idx) {
        const long long v = std::strtoll(cell.c_str(), &end, 10);
        if (end == cell.c_str() || *end != '\0') {
          std::ostringstream msg;
          msg << "non-integer label at row " << row_number << ", column '"
              << headers[col] << "' in " << path;
          throw std::runtime_error(msg.str());
        }
        raw_labels.push_back(v);
      } else {
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
          std::ostringstream msg;
          msg << "non-numeric cell at row " << row_number << ", column '"
              << (col < headers.size() ? headers[col] : "?") << "' in " << path;
          throw std::runtime_error(msg.str());
        }
        features.push_back(v);
      }
      ++col;
    }
    if (col != headers.size()) {
      std::ostringstream msg;
      msg << "row " << row_number << " has " << col << " cells, expected "
          << headers.size() << " in " << path;
      throw std::runtime_error(msg.str());
    }
  }
  const std::size_t n = raw_labels.size();
  if (n == 0) throw std::runtime_error("csv has no data rows: " + path);

  // Dense remap in ascending order of the original values.
  std::map<long long, int> remap;
  for (long long v : raw_labels) remap.emplace(v, 0);
  std::vector<long long> mapping;
  mapping.reserve(remap.size());
  for (auto& [value, index] : remap) {
    index = static_cast<int>(mapping.size());
    mapping.push_back(value);
  }

  LabeledDataset d;
  d.features = DenseMatrix::from_data(n, feature_dim, std::move(features));
  d.labels.reserve(n);
  for (long long v : raw_labels) d.labels.push_back(remap[v]);
  d.groups = d.labels;
  d.num_classes = static_cast<int>(mapping.size());
  d.label_mapping = std::move(mapping);
  return d;
}

LabeledDataset make_unbalanced(const LabeledDataset& dataset,
                               int minority_class, double fraction,
                               RandomSource& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("make_unbalanced: fraction must be in (0, 1]");
  }
  std::size_t minority = 0;
  for (int label : dataset.labels) {
    if (label == minority_class) ++minority;
  }
  if (minority == 0) {
    throw std::invalid_argument(
        "make_unbalanced: minority class absent from dataset");
  }
  double keep_prob = 1.0;
  if (fraction < 1.0) {
    const double m = static_cast<double>(minority);
    const double others = static_cast<double>(dataset.size() - minority);
    // Solve p*m / (p*m + others) = fraction for the keep probability.
    keep_prob = fraction * others / (m * (1.0 - fraction));
    if (keep_prob > 1.0) {
      throw std::invalid_argument(
          "make_unbalanced: minority share is already at or below the target "
          "fraction");
    }
  }
  std::vector<std::size_t> kept;
  kept.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.labels[i] != minority_class || rng.uniform() < keep_prob) {
      kept.push_back(i);
    }
  }
  LabeledDataset out;
  std::vector<double> features;
  features.reserve(kept.size() * dataset.dim());
  out.labels.reserve(kept.size());
  out.groups.reserve(kept.size());
  for (std::size_t i : kept) {
    const std::span<const double> row = dataset.features.row(i);
    features.insert(features.end(), row.begin(), row.end());
    out.labels.push_back(dataset.labels[i]);
    out.groups.push_back(dataset.groups[i]);
  }
  out.features =
      DenseMatrix::from_data(kept.size(), dataset.dim(), std::move(features));
  out.num_classes = dataset.num_classes;
  out.idx_rows = dataset.idx_rows;
  out.idx_cols = dataset.idx_cols;
  out.label_mapping = dataset.label_mapping;
  return out;
}

LabeledDataset make_synthetic(const BlobSpec& spec, RandomSource& rng) {
  if (spec.dims < 1) {
    throw std::invalid_argument("make_synthetic: dims must be >= 1");
  }
  if (spec.per_class_counts.size() < 2) {
    throw std::invalid_argument("make_synthetic: need at least two classes");
  }
  if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
    throw std::invalid_argument(
        "make_synthetic: separation must be finite and >= 0");
  }
  std::size_t total = 0;
  for (std::size_t c : spec.per_class_counts) {
    if (c == 0) {
      throw std::invalid_argument("make_synthetic: empty class count");
    }
    total += c;
  }
  const std::size_t d = static_cast<std::size_t>(spec.dims);
  std::vector<double> features;
  features.reserve(total * d);
  LabeledDataset out;
  out.labels.reserve(total);
  for (std::size_t c = 0; c < spec.per_class_counts.size(); ++c) {
    const std::size_t axis = c % d;
    const double magnitude =
        spec.separation * (1.0 + static_cast<double>(c / d));
    for (std::size_t i = 0; i < spec.per_class_counts[c]; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double center = (j == axis) ? magnitude : 0.0;
        features.push_back(center + rng.gaussian());
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  out.features = DenseMatrix::from_data(total, d, std::move(features));
  out.groups = out.labels;
  out.num_classes = static_cast<int>(spec.per_class_counts.size());
  return out;
}

}  // namespace dpdecay
