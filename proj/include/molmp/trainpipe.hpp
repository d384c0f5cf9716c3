// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "molmp/featurizer.hpp"
#include "molmp/mpnn.hpp"

namespace molmp {

enum class Sampler { Uniform, WeightedByClass };

struct TrainConfig {
  double lr = 0.003;
  int batch_size = 32;
  int epochs = 50;
  std::uint64_t seed = 0;
  double clip_max_norm = 1.0;
  Sampler sampler = Sampler::Uniform;
  bool augment_minority = false;
  int cv_folds = 5;
  Task task = Task::Classification;
  /// Fraction of the training partition held out for validation when no
  /// explicit validation set is given. 0 disables the internal split.
  double validation_fraction = 0.0;
  bool plateau_scheduler = true;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct Confusion {
  int tp = 0;
  int fp = 0;
  int tn = 0;
  int fn = 0;
  int total() const noexcept { return tp + fp + tn + fn; }
};

/// Counts at `threshold` on probabilities; labels are 0/1.
Confusion confusion(std::span<const double> probabilities, std::span<const double> labels, double threshold = 0.5);
/// Area under the ROC curve with ties counted as one half. Throws
/// InputError when only one class is present.
double auc(std::span<const double> scores, std::span<const double> labels);
double f1(const Confusion& c) noexcept;
double accuracy(const Confusion& c) noexcept;
double rmse(std::span<const double> predicted, std::span<const double> truth);
/// Threshold maximizing TPR - FPR (reporting only).
double youden_threshold(std::span<const double> scores, std::span<const double> labels);

/// Half-width of the two-sided Student-t confidence interval of the mean.
/// Zero for fewer than two values.
double margin_of_error(std::span<const double> values, double confidence = 0.95);

struct MetricsReport {
  Task task = Task::Classification;
  int n = 0;
  double loss = 0.0;
  std::optional<double> auc;  // absent when the labels hold one class
  double f1 = 0.0;
  double accuracy = 0.0;
  double rmse = 0.0;
  Confusion counts;

  /// The model-selection score: F1 for classification, RMSE for regression.
  double score() const noexcept { return task == Task::Classification ? f1 : rmse; }
  nlohmann::json to_json() const;
};

using GraphRefs = std::vector<const FeaturizedGraph*>;

GraphRefs refs(const std::vector<FeaturizedGraph>& graphs);
GraphRefs select(const std::vector<FeaturizedGraph>& graphs, std::span<const int> indices);

/// Evaluation-mode metrics of `model` on labelled graphs.
MetricsReport evaluate(Model& model, const GraphRefs& graphs, int batch_size = 256);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Shuffled split holding out `fraction` of the samples, stratified by
/// label when `stratify` is set.
Split holdout_split(std::span<const double> labels, double fraction, std::uint64_t seed, bool stratify);
Split blind_test_split(std::span<const double> labels, std::uint64_t seed, bool stratify = true);
/// k disjoint validation folds covering every sample once.
std::vector<Split> kfold(std::span<const double> labels, int k, std::uint64_t seed, bool stratify = true);

/// 1 / count(class) per sample.
std::vector<double> class_weights(std::span<const double> labels);
/// Draw `n` indices with replacement, proportional to `weights`.
std::vector<int> weighted_sample(std::span<const double> weights, int n, std::mt19937_64& rng);

struct Record {
  std::string name;
  std::string smiles;
  double label = 0.0;
};

/// Append randomized-SMILES copies of minority-class records until the
/// classes balance, at most one copy per original.
std::vector<Record> augment_minority(const std::vector<Record>& records, std::uint64_t seed);

/// 1 when IC50 <= threshold (nM).
std::vector<double> activity_threshold(std::span<const double> ic50_nm, double threshold_nm = 100.0);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double lr = 0.0;
  std::optional<MetricsReport> validation;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  bool stopped = false;  // the epoch callback requested a stop
};

/// Return false to stop training after this epoch.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Minibatch Adam with gradient clipping and a plateau schedule on the
/// validation loss (training loss without validation data). Losses are
/// averaged per graph. Throws InvariantError on a non-finite loss.
TrainResult train(Model& model, const GraphRefs& train_set, const GraphRefs& validation, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct CvResult {
  std::vector<MetricsReport> folds;
  std::vector<TrainResult> runs;
  double mean_score() const;
};

/// Per-fold epoch hook; must be thread-safe when workers > 1.
using FoldCallback = std::function<bool(int fold, const EpochRecord&)>;

/// k-fold cross-validation with fresh models. Folds run on up to
/// `workers` threads; results do not depend on the worker count.
CvResult cross_validate(const ModelSpec& spec, const GraphRefs& graphs, const TrainConfig& config, int workers = 1,
                        const FoldCallback& on_epoch = {});

/// Per-run seed derived from a master seed and a stream index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

}  // namespace molmp
