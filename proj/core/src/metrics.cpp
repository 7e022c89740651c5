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

#include "dpdecay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dpdecay {

double overall_accuracy(const std::vector<int>& predictions,
                        const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || labels.empty()) {
    throw std::invalid_argument("overall_accuracy: size mismatch or empty");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(labels.size());
}

std::map<int, double> group_accuracy(const std::vector<int>& predictions,
                                     const std::vector<int>& labels,
                                     const std::vector<int>& groups) {
  if (predictions.size() != labels.size() ||
      predictions.size() != groups.size() || labels.empty()) {
    throw std::invalid_argument("group_accuracy: size mismatch or empty");
  }
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [correct, total] = counts[groups[i]];
    ++total;
    if (predictions[i] == labels[i]) ++correct;
  }
  std::map<int, double> out;
  for (const auto& [group, ct] : counts) {
    out[group] =
        100.0 * static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return out;
}

double roc_auc_binary(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("roc_auc_binary: size mismatch or empty");
  }
  std::size_t positives = 0;
  for (int label : labels) {
    if (label != 0 && label != 1) {
      throw std::invalid_argument("roc_auc_binary: labels must be 0 or 1");
    }
    positives += static_cast<std::size_t>(label);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument(
        "roc_auc_binary: need both classes present to rank");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Sum of positive ranks, with tied runs sharing their midrank. Ranks are
  // 1-based; all quantities are exact multiples of 0.5 in double.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    const double midrank =
        (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) positive_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double n1 = static_cast<double>(positives);
  const double n0 = static_cast<double>(negatives);
  return (positive_rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

double roc_auc_ovr_macro(const std::vector<std::vector<double>>& scores,
                         const std::vector<int>& labels) {
  if (scores.size() != labels.size() || labels.empty()) {
    throw std::invalid_argument("roc_auc_ovr_macro: size mismatch or empty");
  }
  const std::size_t classes = scores.front().size();
  for (const std::vector<double>& row : scores) {
    if (row.size() != classes) {
      throw std::invalid_argument("roc_auc_ovr_macro: ragged score rows");
    }
  }
  double sum = 0.0;
  int used = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t positives = 0;
    for (int label : labels) {
      if (label == static_cast<int>(c)) ++positives;
    }
    if (positives == 0 || positives == labels.size()) continue;
    std::vector<double> class_scores(labels.size());
    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      class_scores[i] = scores[i][c];
      binary[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
    }
    sum += roc_auc_binary(class_scores, binary);
    ++used;
  }
  if (used == 0) {
    throw std::invalid_argument(
        "roc_auc_ovr_macro: need at least two classes present");
  }
  return sum / static_cast<double>(used);
}

namespace {

double group_acc_or_throw(const std::map<int, double>& acc, int group,
                          const char* who) {
  const auto it = acc.find(group);
  if (it == acc.end()) {
    throw std::invalid_argument(std::string(who) +
                                ": group missing from accuracy map");
  }
  return it->second;
}

}  // namespace

double group_privacy_cost(const std::map<int, double>& nonprivate_group_acc,
                          const std::vector<std::map<int, double>>& private_runs,
                          int group) {
  if (private_runs.empty()) {
    throw std::invalid_argument("group_privacy_cost: no private runs");
  }
  const double nonprivate =
      group_acc_or_throw(nonprivate_group_acc, group, "group_privacy_cost");
  double mean_private = 0.0;
  for (const auto& run : private_runs) {
    mean_private += group_acc_or_throw(run, group, "group_privacy_cost");
  }
  mean_private /= static_cast<double>(private_runs.size());
  return nonprivate - mean_private;
}

double privacy_cost_gap(const std::map<int, double>& nonprivate_group_acc,
                        const std::vector<std::map<int, double>>& private_runs,
                        int group_a, int group_b) {
  const double cost_a =
      group_privacy_cost(nonprivate_group_acc, private_runs, group_a);
  const double cost_b =
      group_privacy_cost(nonprivate_group_acc, private_runs, group_b);
  return std::abs(cost_a - cost_b);
}

}  // namespace dpdecay
