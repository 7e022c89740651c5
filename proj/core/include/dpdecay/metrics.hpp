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

#ifndef DPDECAY_METRICS_HPP_
#define DPDECAY_METRICS_HPP_

#include <map>
#include <vector>

namespace dpdecay {

// Accuracy in percent over all samples.
double overall_accuracy(const std::vector<int>& predictions,
                        const std::vector<int>& labels);

// Accuracy in percent per group id. Every group that appears in `groups`
// has an entry.
std::map<int, double> group_accuracy(const std::vector<int>& predictions,
                                     const std::vector<int>& labels,
                                     const std::vector<int>& groups);

// Area under the ROC curve by the rank statistic:
//   AUC = (R1 - n1 (n1 + 1) / 2) / (n1 n0)
// where R1 sums the ranks of the positive scores and tied scores share the
// midrank of their run. Equals the pairwise win fraction with ties counted
// half. Labels must be 0/1 with both classes present.
double roc_auc_binary(const std::vector<double>& scores,
                      const std::vector<int>& labels);

// Macro-averaged one-vs-rest AUC for multiclass scores; scores[i][c] is the
// score of sample i for class c. Classes covering the entire sample set (or
// absent) are skipped; throws if fewer than two classes appear in labels.
double roc_auc_ovr_macro(const std::vector<std::vector<double>>& scores,
                         const std::vector<int>& labels);

// Per-group cost of privacy: nonprivate accuracy minus the mean private
// accuracy over repeated runs, for group m. Inputs in percent.
double group_privacy_cost(const std::map<int, double>& nonprivate_group_acc,
                          const std::vector<std::map<int, double>>& private_runs,
                          int group);

// Absolute difference of the per-group privacy costs of groups a and b.
double privacy_cost_gap(const std::map<int, double>& nonprivate_group_acc,
                        const std::vector<std::map<int, double>>& private_runs,
                        int group_a, int group_b);

}  // namespace dpdecay

#endif  // DPDECAY_METRICS_HPP_
