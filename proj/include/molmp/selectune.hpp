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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "molmp/featurizer.hpp"
#include "molmp/mpnn.hpp"
#include "molmp/trainpipe.hpp"

namespace molmp {

/// Cross-validated score (higher is better) of a model restricted to the
/// given active features.
using SubsetEvaluator = std::function<double(const std::vector<std::string>& active)>;

struct SelectionRound {
  std::vector<std::string> active;
  double baseline = 0.0;
  std::map<std::string, double> score_without;
  std::map<std::string, int> points;
  std::vector<std::string> removed;
  std::vector<std::string> readded;
  double score_after = 0.0;
};

struct SelectionResult {
  std::vector<std::string> selected;  // candidates kept, in input order
  std::vector<std::string> eliminated;
  std::vector<SelectionRound> rounds;
  std::map<std::string, int> cumulative_points;
  std::vector<std::string> ranking;  // most points first, ties alphabetical
  double initial_score = 0.0;
  double final_score = 0.0;

  /// feature, points per round, cumulative, final rank.
  std::string ranking_csv() const;
  nlohmann::json to_json() const;
};

/// Hybrid backward elimination with forward re-admission. Each round scores
/// every single-feature removal, awards rank points (largest drop earns the
/// most), removes the improving features greedily with re-validation, then
/// tries re-adding earlier eliminations. Stops when no removal improves the
/// round's baseline. Subsets are memoized.
SelectionResult select_features(const std::vector<std::string>& candidates, const SubsetEvaluator& evaluate);

/// Selection over the candidate features of featurized graphs, scored by
/// cross-validated F1 of `spec` trained with `config`. Features active in
/// the graphs but not listed as candidates stay fixed.
SelectionResult select_features(const std::vector<FeaturizedGraph>& graphs, const FeatureManifest& manifest,
                                const std::vector<std::string>& candidates, const ModelSpec& spec,
                                const TrainConfig& config, int workers = 1);

struct Trial {
  int id = 0;
  int hidden = 250;
  double dropout = 0.25;
  int batch_size = 32;
  double loss_gap = 0.0;  // |validation loss - training loss|, minimized
  double score = 0.0;     // validation F1 (maximized) or RMSE (minimized)
  bool pruned = false;
  std::string prune_reason;
  bool pareto = false;

  nlohmann::json to_json() const;
};

struct TuneConfig {
  int trials = 20;
  std::uint64_t seed = 0;
  int hidden_min = 50, hidden_max = 400;
  double dropout_min = 0.05, dropout_max = 0.5;
  int batch_min = 20, batch_max = 180;
  int classification_prune_epoch = 30;
  double classification_prune_f1 = 0.65;
  int regression_prune_epoch = 20;
  double regression_prune_gap = 0.15;

  void validate() const;
};

/// Pruning rule applied after `epoch`: classification trials below the F1
/// floor at the check epoch, regression trials above the loss-gap ceiling.
bool should_prune(const TuneConfig& cfg, Task task, int epoch, double validation_f1, double loss_gap);

/// true when a is at least as good on both objectives and better on one.
bool dominates(const Trial& a, const Trial& b, Task task);

struct TuneResult {
  Task task = Task::Classification;
  std::vector<Trial> trials;
  std::vector<int> pareto;  // trial ids on the front
  int chosen = -1;

  nlohmann::json to_json() const;
};

/// Sample `cfg.trials` configurations uniformly from the ranges.
std::vector<Trial> sample_trials(const TuneConfig& cfg);

/// Nondominated unpruned trials and the knee point: the trial nearest the
/// ideal corner after min-max scaling both objectives over the front.
/// Throws InputError when every trial was pruned.
TuneResult pareto_select(std::vector<Trial> trials, Task task);

/// Runs one trial, filling its objectives and pruning flag.
using TrialRunner = std::function<void(Trial&)>;

TuneResult tune(const TuneConfig& cfg, Task task, const TrialRunner& run, int workers = 1);

/// Tuning with k-fold cross-validation of `spec` on labelled graphs.
TuneResult tune(const std::vector<FeaturizedGraph>& graphs, const ModelSpec& spec, const TrainConfig& config,
                const TuneConfig& cfg, int workers = 1);

}  // namespace molmp
