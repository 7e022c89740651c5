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

#include "dpdecay_cli/experiment.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpdecay/accountant.hpp"
#include "dpdecay/clipping.hpp"
#include "dpdecay/data.hpp"
#include "dpdecay/metrics.hpp"
#include "dpdecay/model.hpp"
#include "dpdecay/rng.hpp"
#include "dpdecay/schedules.hpp"
#include "dpdecay/trainer.hpp"

namespace dpdecay::cli {
namespace {

constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal form, same renderer the JSON outputs use, so
// the CSV files and metrics.json print identical digits for the same value.
std::string fmt(double v) { return Json(v).dump(); }

// ---------------------------------------------------------------------------
// Flat-key config access. Every getter marks its key consumed; finish()
// rejects whatever is left, which catches both typos and options that do not
// apply to the chosen algorithm.

class ConfigReader {
 public:
  explicit ConfigReader(const Json& config) : config_(&config) {
    if (!config.is_object()) {
      throw std::invalid_argument("config root must be a JSON object");
    }
    for (const auto& item : config.items()) {
      if (item.value().is_object()) {
        throw std::invalid_argument(
            "config must use flat dotted keys; key '" + item.key() +
            "' holds a nested object");
      }
    }
  }

  bool has(const std::string& key) const { return config_->contains(key); }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) {
      throw std::invalid_argument("key '" + key + "' must be a number");
    }
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_integer()) {
      throw std::invalid_argument("key '" + key + "' must be an integer");
    }
    return v.get<long long>();
  }

  long long integer_or(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) {
      throw std::invalid_argument("key '" + key + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  std::vector<std::size_t> count_list(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array() || v.empty()) {
      throw std::invalid_argument("key '" + key +
                                  "' must be a non-empty array");
    }
    std::vector<std::size_t> out;
    for (const auto& item : v) {
      if (!item.is_number_integer() || item.get<long long>() <= 0) {
        throw std::invalid_argument("key '" + key +
                                    "' must hold positive integers");
      }
      out.push_back(static_cast<std::size_t>(item.get<long long>()));
    }
    return out;
  }

  // Rejects a present key with a reason, for options the chosen algorithm
  // rules out.
  void reject_if_present(const std::string& key, const std::string& reason) {
    if (has(key)) {
      throw std::invalid_argument("key '" + key + "' " + reason);
    }
  }

  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& item : config_->items()) {
      if (seen_.count(item.key()) == 0) unknown.push_back(item.key());
    }
    if (!unknown.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < unknown.size(); ++i) {
        if (i > 0) joined += ", ";
        joined += "'" + unknown[i] + "'";
      }
      throw std::invalid_argument("unknown or inapplicable config key" +
                                  std::string(unknown.size() > 1 ? "s " : " ") +
                                  joined);
    }
  }

 private:
  const Json& at(const std::string& key) {
    auto it = config_->find(key);
    if (it == config_->end()) {
      throw std::invalid_argument("missing required key '" + key + "'");
    }
    seen_.insert(key);
    return *it;
  }

  const Json* config_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Algorithm registry.

struct AlgorithmTraits {
  std::string canonical;
  bool is_private = false;
  ClipKind clip_kind = ClipKind::dpsgd;
  DecayKind noise_kind = DecayKind::none;
  int extra_queries_per_epoch = 0;
};

AlgorithmTraits algorithm_traits(std::string name) {
  if (name == "v2") name = "v2_step";
  if (name == "nonprivate") return {"nonprivate", false, ClipKind::dpsgd,
                                    DecayKind::none, 0};
  if (name == "dpsgd") return {"dpsgd", true, ClipKind::dpsgd,
                               DecayKind::none, 0};
  if (name == "autos") return {"autos", true, ClipKind::autos,
                               DecayKind::none, 0};
  if (name == "psac") return {"psac", true, ClipKind::psac,
                              DecayKind::none, 0};
  if (name == "global") return {"global", true, ClipKind::global,
                                DecayKind::none, 0};
  if (name == "global_adapt") return {"global_adapt", true,
                                      ClipKind::global_adapt,
                                      DecayKind::none, 1};
  if (name == "v2_none") return {"v2_none", true, ClipKind::v2,
                                 DecayKind::none, 0};
  if (name == "v2_linear") return {"v2_linear", true, ClipKind::v2,
                                   DecayKind::linear, 0};
  if (name == "v2_time") return {"v2_time", true, ClipKind::v2,
                                 DecayKind::time, 0};
  if (name == "v2_step") return {"v2_step", true, ClipKind::v2,
                                 DecayKind::step, 0};
  throw std::invalid_argument(
      "unknown algorithm '" + name +
      "' (expected one of: nonprivate, dpsgd, autos, psac, global, "
      "global_adapt, v2_none, v2_linear, v2_time, v2_step, v2)");
}

// ---------------------------------------------------------------------------
// Data loading.

struct DataBundle {
  LabeledDataset train;
  LabeledDataset test;
};

DataBundle load_data(ConfigReader& r) {
  const std::string kind = r.text("data.kind");
  DataBundle out;
  RandomSource data_root(static_cast<std::uint64_t>(
      r.integer_or("data.seed", 1234)));
  if (kind == "synthetic") {
    BlobSpec spec;
    spec.dims = static_cast<int>(r.integer("data.dims"));
    spec.separation = r.number_or("data.separation", 2.0);
    BlobSpec train_spec = spec;
    train_spec.per_class_counts = r.count_list("data.train_counts");
    BlobSpec test_spec = spec;
    test_spec.per_class_counts = r.count_list("data.test_counts");
    if (train_spec.per_class_counts.size() !=
        test_spec.per_class_counts.size()) {
      throw std::invalid_argument(
          "'data.train_counts' and 'data.test_counts' must list the same "
          "number of classes");
    }
    RandomSource train_rng = data_root.child(0);
    RandomSource test_rng = data_root.child(1);
    out.train = make_synthetic(train_spec, train_rng);
    out.test = make_synthetic(test_spec, test_rng);
  } else if (kind == "idx") {
    out.train = load_idx(r.text("data.train_images"),
                         r.text("data.train_labels"));
    out.test = load_idx(r.text("data.test_images"), r.text("data.test_labels"));
  } else if (kind == "csv") {
    const std::string label_column = r.text("data.label_column");
    out.train = load_csv(r.text("data.train_csv"), label_column);
    out.test = load_csv(r.text("data.test_csv"), label_column);
    if (out.train.label_mapping != out.test.label_mapping) {
      throw std::invalid_argument(
          "train and test csv files disagree on the label set");
    }
  } else {
    throw std::invalid_argument("key 'data.kind' must be one of: synthetic, "
                                "idx, csv (got '" + kind + "')");
  }
  if (out.train.dim() != out.test.dim()) {
    throw std::invalid_argument("train and test feature dimensions differ");
  }
  const int num_classes = std::max(out.train.num_classes,
                                   out.test.num_classes);
  out.train.num_classes = num_classes;
  out.test.num_classes = num_classes;

  const bool has_cls = r.has("data.unbalance_class");
  const bool has_frac = r.has("data.unbalance_fraction");
  if (has_cls != has_frac) {
    throw std::invalid_argument(
        "'data.unbalance_class' and 'data.unbalance_fraction' must be set "
        "together");
  }
  if (has_cls) {
    RandomSource unbalance_rng = data_root.child(2);
    out.train = make_unbalanced(out.train,
                                static_cast<int>(r.integer(
                                    "data.unbalance_class")),
                                r.number("data.unbalance_fraction"),
                                unbalance_rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment resolution: config -> trainer config + privacy ledger.

struct ResolvedExperiment {
  AlgorithmTraits traits;
  Architecture arch;
  TrainerConfig trainer;
  int repetitions = 1;
  std::uint64_t base_seed = 1;
  // Privacy ledger, populated when the algorithm is private.
  double sigma0_sq = 0.0;
  double delta = 0.0;
  TcdpBudget budget;
  DpConversion conversion;
  AmplificationReport amplification;
  // Fairness request.
  bool has_fairness = false;
  int group_a = 0;
  int group_b = 0;
};

ResolvedExperiment resolve_experiment(ConfigReader& r,
                                      const AlgorithmTraits& traits,
                                      const DataBundle& data) {
  ResolvedExperiment exp;
  exp.traits = traits;

  const int hidden = static_cast<int>(r.integer_or("model.hidden_dim", 0));
  const int input_dim = static_cast<int>(data.train.dim());
  if (hidden > 0) {
    const Activation act =
        activation_from_string(r.text_or("model.activation", "relu"));
    exp.arch = Architecture::mlp(input_dim, hidden, data.train.num_classes,
                                 act);
  } else {
    exp.arch = Architecture::softmax_regression(input_dim,
                                                data.train.num_classes);
  }

  TrainerConfig& t = exp.trainer;
  t.epochs = static_cast<int>(r.integer("train.epochs"));
  t.batch_size = r.integer("train.batch_size");
  t.optimizer = optimizer_from_string(r.text_or("train.optimizer", "sgd"));
  t.weight_decay = r.number_or("train.weight_decay", 0.0);

  LrSchedule lr;
  lr.kind = lr_kind_from_string(r.text_or("train.lr.kind", "constant"));
  lr.base = r.number("train.lr.base");
  if (lr.kind == LrKind::step) {
    lr.decay_rate = r.number_or("train.lr.decay_rate", 0.5);
    lr.period_epochs =
        static_cast<int>(r.integer_or("train.lr.period_epochs", 10));
  } else if (lr.kind == LrKind::one_cycle) {
    lr.peak_factor = r.number_or("train.lr.peak_factor", 10.0);
    lr.warmup_fraction = r.number_or("train.lr.warmup_fraction", 0.3);
  }
  t.lr = lr;

  const LossKind loss_kind =
      loss_kind_from_string(r.text_or("train.loss.kind", "cross_entropy"));
  if (loss_kind == LossKind::focal) {
    t.loss = LossSpec::make(loss_kind, r.number_or("train.loss.alpha", 1.0),
                            r.number_or("train.loss.gamma", 2.0));
  } else {
    t.loss = LossSpec::make(loss_kind);
  }

  exp.base_seed = static_cast<std::uint64_t>(r.integer_or("train.seed", 1));
  exp.repetitions = static_cast<int>(r.integer_or("train.repetitions", 1));
  if (exp.repetitions < 1) {
    throw std::invalid_argument("key 'train.repetitions' must be >= 1");
  }

  if (!traits.is_private) {
    for (const char* key :
         {"clip.c0", "clip.z0", "clip.w", "clip.r", "clip.adapt_target",
          "clip.adapt_noise_scale", "clip.decay_rate", "clip.decay_period",
          "privacy.delta", "privacy.sigma0_squared", "privacy.epsilon",
          "privacy.decay.rate", "privacy.decay.period"}) {
      r.reject_if_present(key,
                          "does not apply to algorithm 'nonprivate'");
    }
    return exp;
  }

  // Clipping policy.
  const double c0 = r.number_or("clip.c0", 1.0);
  ClipPolicy policy;
  switch (traits.clip_kind) {
    case ClipKind::dpsgd:
      policy = ClipPolicy::make(ClipKind::dpsgd, c0);
      break;
    case ClipKind::autos:
      policy = ClipPolicy::make(ClipKind::autos, c0, 0.0, 1.0,
                                r.number_or("clip.r", 0.01));
      break;
    case ClipKind::psac:
      policy = ClipPolicy::make(ClipKind::psac, c0, 0.0,
                                r.number_or("clip.w", 1.0));
      break;
    case ClipKind::global:
      policy = ClipPolicy::make(ClipKind::global, c0, r.number("clip.z0"));
      break;
    case ClipKind::global_adapt:
      policy = ClipPolicy::make(ClipKind::global_adapt, c0,
                                r.number("clip.z0"), 1.0, 0.01,
                                r.number_or("clip.adapt_target", 0.1));
      t.adapt_noise_scale = r.number_or("clip.adapt_noise_scale", 1.0);
      break;
    case ClipKind::v2:
      policy = ClipPolicy::make(ClipKind::v2, c0, r.number("clip.z0"),
                                r.number_or("clip.w", 1.0));
      break;
  }
  t.clip = policy;

  const bool decay_eligible =
      policy.uses_threshold() && traits.clip_kind != ClipKind::global_adapt;
  if (r.has("clip.decay_rate")) {
    if (!decay_eligible) {
      throw std::invalid_argument("key 'clip.decay_rate' does not apply to "
                                  "algorithm '" + traits.canonical + "'");
    }
    const double rate = r.number("clip.decay_rate");
    const int period =
        static_cast<int>(r.integer_or("clip.decay_period", 1));
    t.clip_decay = ClipSchedule::make(policy.z, rate, period);
  } else {
    r.reject_if_present("clip.decay_period",
                        "requires 'clip.decay_rate' to be set");
  }

  // Privacy budget: exactly one of the starting variance and the epsilon
  // target, plus the decay parameters the noise schedule needs.
  exp.delta = r.number("privacy.delta");
  const bool has_sigma = r.has("privacy.sigma0_squared");
  const bool has_eps = r.has("privacy.epsilon");
  if (has_sigma == has_eps) {
    throw std::invalid_argument(
        "exactly one of 'privacy.sigma0_squared' and 'privacy.epsilon' must "
        "be set");
  }

  double rate = 1.0;
  int period = 1;
  switch (traits.noise_kind) {
    case DecayKind::none:
      r.reject_if_present("privacy.decay.rate",
                          "does not apply to a constant noise schedule");
      r.reject_if_present("privacy.decay.period",
                          "does not apply to a constant noise schedule");
      break;
    case DecayKind::linear:
    case DecayKind::time:
      rate = r.number("privacy.decay.rate");
      r.reject_if_present("privacy.decay.period",
                          "applies to step decay only");
      break;
    case DecayKind::step:
      rate = r.number("privacy.decay.rate");
      period = static_cast<int>(r.integer("privacy.decay.period"));
      break;
  }

  const DecaySchedule unit =
      DecaySchedule::make(traits.noise_kind, 1.0, rate, period);
  const PrivacySpec unit_spec = PrivacySpec::make(
      c0, t.batch_size, static_cast<long long>(data.train.size()), t.epochs,
      unit, exp.delta, traits.extra_queries_per_epoch);
  exp.sigma0_sq = has_eps
                      ? solve_sigma0_sq(r.number("privacy.epsilon"),
                                        exp.delta, unit_spec)
                      : r.number("privacy.sigma0_squared");

  const DecaySchedule schedule =
      DecaySchedule::make(traits.noise_kind, exp.sigma0_sq, rate, period);
  const PrivacySpec spec = PrivacySpec::make(
      c0, t.batch_size, static_cast<long long>(data.train.size()), t.epochs,
      schedule, exp.delta, traits.extra_queries_per_epoch);
  t.noise = schedule;
  exp.budget = compose_closed_form(spec);
  exp.conversion = tcdp_to_dp(exp.budget, exp.delta);
  exp.amplification = check_amplification_preconditions(spec);
  return exp;
}

void resolve_fairness(ConfigReader& r, ResolvedExperiment& exp) {
  const bool any = r.has("fairness.group_a") || r.has("fairness.group_b") ||
                   r.has("fairness.reference");
  if (!any) return;
  const std::string reference = r.text_or("fairness.reference", "nonprivate");
  if (reference != "nonprivate") {
    throw std::invalid_argument(
        "key 'fairness.reference' only supports 'nonprivate'");
  }
  exp.has_fairness = true;
  exp.group_a = static_cast<int>(r.integer("fairness.group_a"));
  exp.group_b = static_cast<int>(r.integer("fairness.group_b"));
}

// ---------------------------------------------------------------------------
// Execution.

Json group_map_to_json(const std::map<int, double>& m) {
  Json out = Json::object();
  for (const auto& [group, value] : m) out[std::to_string(group)] = value;
  return out;
}

double last_nonempty_loss(const RunRecord& record) {
  for (auto it = record.iterations.rbegin(); it != record.iterations.rend();
       ++it) {
    if (it->batch_size > 0) return it->loss;
  }
  return 0.0;
}

struct ExperimentOutcome {
  Json metrics;
  Json resolved;
  std::string trajectory_csv;
  // One comparison row.
  std::string algorithm;
  std::optional<double> epsilon;
  std::optional<double> sigma0_sq;
  double accuracy = 0.0;
  double auc = 0.0;
  std::optional<double> acc_a;
  std::optional<double> acc_b;
  std::optional<double> pi_a;
  std::optional<double> pi_b;
  std::optional<double> pi_gap;
};

std::string render_trajectory(const RunRecord& record) {
  std::string csv = "t,e,sigma2,z_e,avg_grad_norm,loss\n";
  for (const IterationRecord& it : record.iterations) {
    csv += std::to_string(it.t);
    csv += ',';
    csv += std::to_string(it.epoch);
    csv += ',';
    csv += fmt(it.sigma_sq);
    csv += ',';
    csv += fmt(it.z);
    csv += ',';
    csv += fmt(it.avg_grad_norm);
    csv += ',';
    csv += fmt(it.loss);
    csv += '\n';
  }
  return csv;
}

ExperimentOutcome execute_experiment(const Json& config) {
  ConfigReader r(config);
  const AlgorithmTraits traits = algorithm_traits(r.text("algorithm"));
  DataBundle data = load_data(r);
  ResolvedExperiment exp = resolve_experiment(r, traits, data);
  resolve_fairness(r, exp);
  r.finish();

  std::vector<RunRecord> records;
  records.reserve(static_cast<std::size_t>(exp.repetitions));
  for (int rep = 0; rep < exp.repetitions; ++rep) {
    TrainerConfig cfg = exp.trainer;
    cfg.seed = exp.base_seed + static_cast<std::uint64_t>(rep);
    records.push_back(train(cfg, exp.arch, data.train, &data.test));
  }

  Json runs = Json::array();
  double acc_sum = 0.0;
  double auc_sum = 0.0;
  std::map<int, double> group_sum;
  std::vector<std::map<int, double>> group_runs;
  for (const RunRecord& record : records) {
    const EpochRecord& last = record.epochs.back();
    acc_sum += last.test_accuracy;
    auc_sum += last.auc;
    for (const auto& [group, value] : last.group_accuracy) {
      group_sum[group] += value;
    }
    group_runs.push_back(last.group_accuracy);
    Json epoch_accuracy = Json::array();
    for (const EpochRecord& e : record.epochs) {
      epoch_accuracy.push_back(e.test_accuracy);
    }
    runs.push_back({{"seed", record.seed},
                    {"accuracy", last.test_accuracy},
                    {"auc", last.auc},
                    {"group_accuracy", group_map_to_json(last.group_accuracy)},
                    {"final_loss", last_nonempty_loss(record)},
                    {"epoch_accuracy", epoch_accuracy}});
  }
  const double n_runs = static_cast<double>(records.size());
  std::map<int, double> group_mean;
  for (const auto& [group, total] : group_sum) {
    group_mean[group] = total / n_runs;
  }

  ExperimentOutcome out;
  out.algorithm = traits.canonical;
  out.accuracy = acc_sum / n_runs;
  out.auc = auc_sum / n_runs;

  Json metrics;
  metrics["algorithm"] = traits.canonical;
  metrics["runs"] = runs;
  metrics["aggregate"] = {{"accuracy", out.accuracy},
                          {"auc", out.auc},
                          {"group_accuracy", group_map_to_json(group_mean)}};

  if (traits.is_private) {
    out.epsilon = exp.conversion.budget.epsilon;
    out.sigma0_sq = exp.sigma0_sq;
    metrics["privacy"] = {
        {"sigma0_squared", exp.sigma0_sq},
        {"rho", exp.budget.rho},
        {"omega", exp.budget.omega},
        {"epsilon", exp.conversion.budget.epsilon},
        {"delta", exp.delta},
        {"warnings", exp.conversion.warnings},
        {"amplification",
         {{"all_pass", exp.amplification.all_pass()},
          {"failures", exp.amplification.failures()}}}};
  }

  if (exp.has_fairness) {
    TrainerConfig ref_cfg = exp.trainer;
    ref_cfg.clip.reset();
    ref_cfg.noise.reset();
    ref_cfg.clip_decay.reset();
    ref_cfg.seed = exp.base_seed;
    const RunRecord ref = train(ref_cfg, exp.arch, data.train, &data.test);
    const EpochRecord& ref_last = ref.epochs.back();
    const double pi_a = group_privacy_cost(ref_last.group_accuracy, group_runs,
                                           exp.group_a);
    const double pi_b = group_privacy_cost(ref_last.group_accuracy, group_runs,
                                           exp.group_b);
    const double gap = privacy_cost_gap(ref_last.group_accuracy, group_runs,
                                        exp.group_a, exp.group_b);
    out.pi_a = pi_a;
    out.pi_b = pi_b;
    out.pi_gap = gap;
    metrics["fairness"] = {
        {"group_a", exp.group_a},
        {"group_b", exp.group_b},
        {"reference_accuracy", ref_last.test_accuracy},
        {"reference_group_accuracy",
         group_map_to_json(ref_last.group_accuracy)},
        {"pi_a", pi_a},
        {"pi_b", pi_b},
        {"gap", gap}};
    auto a_it = group_mean.find(exp.group_a);
    auto b_it = group_mean.find(exp.group_b);
    if (a_it != group_mean.end()) out.acc_a = a_it->second;
    if (b_it != group_mean.end()) out.acc_b = b_it->second;
  }

  out.metrics = metrics;
  out.trajectory_csv = render_trajectory(records.front());
  out.resolved = {
      {"algorithm", traits.canonical},
      {"train_size", data.train.size()},
      {"test_size", data.test.size()},
      {"parameter_count", exp.arch.param_count()},
      {"sampling_rate", records.front().sampling_rate},
      {"total_iterations", records.front().total_iterations},
      {"repetitions", exp.repetitions}};
  if (traits.is_private) {
    out.resolved["sigma0_squared"] = exp.sigma0_sq;
    out.resolved["epsilon"] = exp.conversion.budget.epsilon;
    out.resolved["delta"] = exp.delta;
  }
  return out;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

std::string table_cell(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

}  // namespace

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + path + "'");
  }
  Json parsed;
  try {
    parsed = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("config file '" + path +
                                "' is not valid JSON: " + e.what());
  }
  if (!parsed.is_object()) {
    throw std::invalid_argument("config file '" + path +
                                "' must hold a JSON object");
  }
  // A run manifest embeds the original flat config; accept it directly so a
  // finished run can be replayed from its manifest.
  if (parsed.contains("config") && parsed["config"].is_object()) {
    return parsed["config"];
  }
  return parsed;
}

void apply_override(Json& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment +
                                "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  const Json parsed = Json::parse(raw, nullptr, false);
  if (!parsed.is_discarded() && !parsed.is_object()) {
    config[key] = parsed;
  } else {
    config[key] = raw;
  }
}

Json run_accountant(const Json& config) {
  ConfigReader r(config);
  const double sensitivity = r.number_or("accountant.sensitivity", 1.0);
  const long long dataset_size = r.integer("accountant.dataset_size");
  const long long batch_size = r.integer("accountant.batch_size");
  const int epochs = static_cast<int>(r.integer("accountant.epochs"));
  const int extra = static_cast<int>(
      r.integer_or("accountant.extra_queries_per_epoch", 0));
  const double delta = r.number("privacy.delta");

  const DecayKind kind =
      decay_kind_from_string(r.text_or("privacy.decay.kind", "none"));
  double rate = 1.0;
  int period = 1;
  switch (kind) {
    case DecayKind::none:
      r.reject_if_present("privacy.decay.rate",
                          "does not apply to a constant noise schedule");
      r.reject_if_present("privacy.decay.period",
                          "does not apply to a constant noise schedule");
      break;
    case DecayKind::linear:
    case DecayKind::time:
      rate = r.number("privacy.decay.rate");
      r.reject_if_present("privacy.decay.period",
                          "applies to step decay only");
      break;
    case DecayKind::step:
      rate = r.number("privacy.decay.rate");
      period = static_cast<int>(r.integer("privacy.decay.period"));
      break;
  }

  const bool has_sigma = r.has("privacy.sigma0_squared");
  const bool has_eps = r.has("privacy.epsilon");
  if (has_sigma == has_eps) {
    throw std::invalid_argument(
        "exactly one of 'privacy.sigma0_squared' and 'privacy.epsilon' must "
        "be set");
  }

  const DecaySchedule unit = DecaySchedule::make(kind, 1.0, rate, period);
  const PrivacySpec unit_spec = PrivacySpec::make(
      sensitivity, batch_size, dataset_size, epochs, unit, delta, extra);
  const double sigma0_sq =
      has_eps ? solve_sigma0_sq(r.number("privacy.epsilon"), delta, unit_spec)
              : r.number("privacy.sigma0_squared");
  r.finish();

  const DecaySchedule schedule =
      DecaySchedule::make(kind, sigma0_sq, rate, period);
  const PrivacySpec spec = PrivacySpec::make(
      sensitivity, batch_size, dataset_size, epochs, schedule, delta, extra);
  const TcdpBudget budget = compose_closed_form(spec);
  const DpConversion conversion = tcdp_to_dp(budget, delta);
  const AmplificationReport amplification =
      check_amplification_preconditions(spec);

  return Json{{"mode", has_eps ? "epsilon_to_sigma" : "sigma_to_epsilon"},
              {"sensitivity", sensitivity},
              {"dataset_size", dataset_size},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"queries_per_epoch", spec.queries_per_epoch()},
              {"sampling_rate", spec.sampling_rate()},
              {"schedule",
               {{"kind", to_string(kind)},
                {"rate", rate},
                {"period_epochs", period}}},
              {"sigma0_squared", sigma0_sq},
              {"rho", budget.rho},
              {"omega", budget.omega},
              {"epsilon", conversion.budget.epsilon},
              {"delta", delta},
              {"warnings", conversion.warnings},
              {"amplification",
               {{"all_pass", amplification.all_pass()},
                {"failures", amplification.failures()}}}};
}

Json run_train(const Json& config, const std::string& out_dir) {
  ExperimentOutcome outcome = execute_experiment(config);
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + out_dir +
                             "': " + ec.message());
  }
  const Json manifest = {{"version", kToolVersion},
                         {"config", config},
                         {"resolved", outcome.resolved}};
  write_text_file(dir / "metrics.json", outcome.metrics.dump(2) + "\n");
  write_text_file(dir / "trajectory.csv", outcome.trajectory_csv);
  write_text_file(dir / "run_manifest.json", manifest.dump(2) + "\n");
  return outcome.metrics;
}

Json run_compare(const std::vector<Json>& configs,
                 const std::string& out_dir) {
  if (configs.size() < 2) {
    throw std::invalid_argument("compare needs at least two configs");
  }
  const auto data_block = [](const Json& config) {
    Json block = Json::object();
    if (config.is_object()) {
      for (const auto& item : config.items()) {
        if (item.key().rfind("data.", 0) == 0) {
          block[item.key()] = item.value();
        }
      }
    }
    return block;
  };
  const Json reference_block = data_block(configs.front());
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (data_block(configs[i]) != reference_block) {
      throw std::invalid_argument(
          "compare configs must share a dataset; config #" +
          std::to_string(i + 1) + " differs on its data.* keys");
    }
  }

  const std::vector<std::string> headers = {
      "algorithm", "epsilon",          "sigma0_squared",
      "accuracy",  "auc",              "group_a_accuracy",
      "group_b_accuracy", "pi_a",      "pi_b",
      "pi_gap"};
  std::vector<std::vector<std::string>> cells;
  Json rows = Json::array();
  for (const Json& config : configs) {
    const ExperimentOutcome outcome = execute_experiment(config);
    cells.push_back({outcome.algorithm, table_cell(outcome.epsilon),
                     table_cell(outcome.sigma0_sq), fmt(outcome.accuracy),
                     fmt(outcome.auc), table_cell(outcome.acc_a),
                     table_cell(outcome.acc_b), table_cell(outcome.pi_a),
                     table_cell(outcome.pi_b), table_cell(outcome.pi_gap)});
    Json row = {{"algorithm", outcome.algorithm},
                {"accuracy", outcome.accuracy},
                {"auc", outcome.auc}};
    if (outcome.epsilon) row["epsilon"] = *outcome.epsilon;
    if (outcome.sigma0_sq) row["sigma0_squared"] = *outcome.sigma0_sq;
    if (outcome.acc_a) row["group_a_accuracy"] = *outcome.acc_a;
    if (outcome.acc_b) row["group_b_accuracy"] = *outcome.acc_b;
    if (outcome.pi_a) row["pi_a"] = *outcome.pi_a;
    if (outcome.pi_b) row["pi_b"] = *outcome.pi_b;
    if (outcome.pi_gap) row["pi_gap"] = *outcome.pi_gap;
    rows.push_back(row);
  }

  std::string csv;
  for (std::size_t c = 0; c < headers.size(); ++c) {
    if (c > 0) csv += ',';
    csv += headers[c];
  }
  csv += '\n';
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) csv += ',';
      csv += row[c];
    }
    csv += '\n';
  }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : cells) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  std::ostringstream table;
  const auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) table << "  ";
      table << row[c];
      for (std::size_t pad = row[c].size(); pad < widths[c]; ++pad) {
        table << ' ';
      }
    }
    table << '\n';
  };
  emit_row(headers);
  for (const auto& row : cells) emit_row(row);

  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + out_dir +
                             "': " + ec.message());
  }
  write_text_file(dir / "compare.csv", csv);
  write_text_file(dir / "compare.txt", table.str());
  return Json{{"rows", rows}, {"table", table.str()}};
}

}  // namespace dpdecay::cli
