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

#include "molmp/selectune.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "molmp/error.hpp"

namespace molmp {

namespace {

std::vector<std::string> without(const std::vector<std::string>& v, const std::string& name) {
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (s != name) out.push_back(s);
  }
  return out;
}

// Keep the caller's candidate order so memo keys and model inputs are stable.
std::vector<std::string> ordered(const std::vector<std::string>& universe, const std::set<std::string>& keep) {
  std::vector<std::string> out;
  for (const auto& s : universe) {
    if (keep.count(s)) out.push_back(s);
  }
  return out;
}

std::string key_of(const std::vector<std::string>& v) {
  std::string k;
  for (const auto& s : v) k += s + '\n';
  return k;
}

}  // namespace

SelectionResult select_features(const std::vector<std::string>& candidates, const SubsetEvaluator& evaluate) {
  if (candidates.size() < 2) throw InputError("feature selection needs at least 2 candidate features");
  if (std::set<std::string>(candidates.begin(), candidates.end()).size() != candidates.size()) {
    throw InputError("duplicate candidate feature");
  }
  std::map<std::string, double> memo;
  auto score = [&](const std::vector<std::string>& active) {
    const auto k = key_of(active);
    auto it = memo.find(k);
    if (it == memo.end()) it = memo.emplace(k, evaluate(active)).first;
    return it->second;
  };

  SelectionResult res;
  std::set<std::string> active(candidates.begin(), candidates.end());
  std::vector<std::string> eliminated;
  for (const auto& c : candidates) res.cumulative_points[c] = 0;
  res.initial_score = score(candidates);

  for (std::size_t round = 0; round <= candidates.size() && active.size() >= 2; ++round) {
    SelectionRound r;
    r.active = ordered(candidates, active);
    r.baseline = score(r.active);
    for (const auto& f : r.active) r.score_without[f] = score(without(r.active, f));

    std::vector<std::string> by_drop = r.active;
    std::sort(by_drop.begin(), by_drop.end(), [&](const std::string& a, const std::string& b) {
      const double da = r.baseline - r.score_without[a];
      const double db = r.baseline - r.score_without[b];
      return da != db ? da > db : a < b;
    });
    for (std::size_t i = 0; i < by_drop.size(); ++i) {
      r.points[by_drop[i]] = static_cast<int>(by_drop.size() - i);
      res.cumulative_points[by_drop[i]] += r.points[by_drop[i]];
    }

    std::vector<std::string> improving;
    for (auto it = by_drop.rbegin(); it != by_drop.rend(); ++it) {
      if (r.score_without[*it] > r.baseline) improving.push_back(*it);
    }
    std::stable_sort(improving.begin(), improving.end(), [&](const std::string& a, const std::string& b) {
      return r.score_without[a] > r.score_without[b];
    });
    double current = r.baseline;
    for (const auto& f : improving) {
      if (active.size() <= 1) break;
      std::set<std::string> trial = active;
      trial.erase(f);
      const double s = score(ordered(candidates, trial));
      if (s > current) {
        active = std::move(trial);
        current = s;
        r.removed.push_back(f);
      }
    }
    for (const auto& e : eliminated) {
      std::set<std::string> trial = active;
      trial.insert(e);
      const double s = score(ordered(candidates, trial));
      if (s > current) {
        active = std::move(trial);
        current = s;
        r.readded.push_back(e);
      }
    }
    for (const auto& f : r.removed) eliminated.push_back(f);
    for (const auto& f : r.readded) eliminated.erase(std::find(eliminated.begin(), eliminated.end(), f));
    r.score_after = current;
    spdlog::info("selection round {}: baseline {:.4f}, removed {}, re-added {}", round + 1, r.baseline,
                 r.removed.size(), r.readded.size());
    const bool progressed = !r.removed.empty();
    res.rounds.push_back(std::move(r));
    if (!progressed) break;
  }

  res.selected = ordered(candidates, active);
  res.eliminated = eliminated;
  res.final_score = score(res.selected);
  res.ranking = candidates;
  std::sort(res.ranking.begin(), res.ranking.end(), [&](const std::string& a, const std::string& b) {
    const int pa = res.cumulative_points.at(a);
    const int pb = res.cumulative_points.at(b);
    return pa != pb ? pa > pb : a < b;
  });
  return res;
}

std::string SelectionResult::ranking_csv() const {
  std::ostringstream out;
  out << "feature";
  for (std::size_t r = 0; r < rounds.size(); ++r) out << ",round_" << r + 1;
  out << ",cumulative,final_rank\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& f = ranking[i];
    out << f;
    for (const auto& r : rounds) {
      const auto it = r.points.find(f);
      out << ',' << (it == r.points.end() ? 0 : it->second);
    }
    out << ',' << cumulative_points.at(f) << ',' << i + 1 << '\n';
  }
  return out.str();
}

nlohmann::json SelectionResult::to_json() const {
  nlohmann::json rounds_json = nlohmann::json::array();
  for (const auto& r : rounds) {
    rounds_json.push_back({{"active", r.active},
                           {"baseline", r.baseline},
                           {"score_without", r.score_without},
                           {"points", r.points},
                           {"removed", r.removed},
                           {"readded", r.readded},
                           {"score_after", r.score_after}});
  }
  return {{"selected", selected},         {"eliminated", eliminated},   {"rounds", rounds_json},
          {"cumulative_points", cumulative_points}, {"ranking", ranking}, {"initial_score", initial_score},
          {"final_score", final_score}};
}

SelectionResult select_features(const std::vector<FeaturizedGraph>& graphs, const FeatureManifest& manifest,
                                const std::vector<std::string>& candidates, const ModelSpec& spec,
                                const TrainConfig& config, int workers) {
  if (graphs.empty()) throw InputError("no graphs to select features on");
  if (static_cast<int>(graphs.size()) < 2 * config.cv_folds) throw InputError("dataset too small for cross-validation");
  const FeatureMask base = graphs.front().feature_mask;
  for (const auto& c : candidates) {
    const auto idx = manifest.index_of(c);
    if (idx < 0 || !base[idx]) throw InputError("candidate feature '" + c + "' is not active in the graphs");
  }
  auto evaluate = [&](const std::vector<std::string>& active) {
    FeatureMask mask = base;
    for (const auto& c : candidates) mask[manifest.index_of(c)] = false;
    for (const auto& a : active) mask[manifest.index_of(a)] = true;
    std::vector<FeaturizedGraph> masked;
    masked.reserve(graphs.size());
    for (const auto& g : graphs) masked.push_back(apply_mask(g, manifest, mask));
    ModelSpec s = spec;
    s.atom_features = masked.front().x.cols;
    s.bond_features = masked.front().edge_attr.cols;
    s.global_features = static_cast<int>(masked.front().u.size());
    const double value = cross_validate(s, refs(masked), config, workers).mean_score();
    spdlog::debug("subset [{}] -> {:.4f}", fmt::join(active, ","), value);
    return value;
  };
  return select_features(candidates, evaluate);
}

nlohmann::json Trial::to_json() const {
  return {{"id", id},           {"hidden", hidden}, {"dropout", dropout},           {"batch_size", batch_size},
          {"loss_gap", loss_gap}, {"score", score},   {"pruned", pruned},             {"prune_reason", prune_reason},
          {"pareto", pareto}};
}

void TuneConfig::validate() const {
  if (trials < 1) throw InputError("tuning needs at least one trial");
  if (hidden_min < 1 || hidden_min > hidden_max) throw InputError("bad hidden-channel range");
  if (!(dropout_min >= 0.0 && dropout_min <= dropout_max && dropout_max < 1.0)) throw InputError("bad dropout range");
  if (batch_min < 1 || batch_min > batch_max) throw InputError("bad batch-size range");
}

bool should_prune(const TuneConfig& cfg, Task task, int epoch, double validation_f1, double loss_gap) {
  if (task == Task::Classification) {
    return epoch == cfg.classification_prune_epoch && validation_f1 < cfg.classification_prune_f1;
  }
  return epoch == cfg.regression_prune_epoch && loss_gap > cfg.regression_prune_gap;
}

bool dominates(const Trial& a, const Trial& b, Task task) {
  const bool higher_better = task == Task::Classification;
  const bool score_ge = higher_better ? a.score >= b.score : a.score <= b.score;
  const bool score_gt = higher_better ? a.score > b.score : a.score < b.score;
  return a.loss_gap <= b.loss_gap && score_ge && (a.loss_gap < b.loss_gap || score_gt);
}

std::vector<Trial> sample_trials(const TuneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> hidden(cfg.hidden_min, cfg.hidden_max);
  std::uniform_real_distribution<double> dropout(cfg.dropout_min, cfg.dropout_max);
  std::uniform_int_distribution<int> batch(cfg.batch_min, cfg.batch_max);
  std::vector<Trial> out(cfg.trials);
  for (int i = 0; i < cfg.trials; ++i) {
    out[i].id = i;
    out[i].hidden = hidden(rng);
    out[i].dropout = dropout(rng);
    out[i].batch_size = batch(rng);
  }
  return out;
}

TuneResult pareto_select(std::vector<Trial> trials, Task task) {
  TuneResult res;
  res.task = task;
  for (auto& t : trials) t.pareto = false;
  std::vector<Trial*> live;
  for (auto& t : trials) {
    if (!t.pruned) live.push_back(&t);
  }
  if (live.empty()) throw InputError("every tuning trial was pruned");
  std::vector<Trial*> front;
  for (auto* a : live) {
    bool dominated = false;
    for (auto* b : live) dominated = dominated || (b != a && dominates(*b, *a, task));
    if (!dominated) {
      a->pareto = true;
      front.push_back(a);
      res.pareto.push_back(a->id);
    }
  }
  // Both objectives oriented so that smaller is better.
  auto objective = [&](const Trial* t, int k) {
    if (k == 0) return t->loss_gap;
    return task == Task::Classification ? -t->score : t->score;
  };
  double lo[2], hi[2];
  for (int k = 0; k < 2; ++k) {
    lo[k] = std::numeric_limits<double>::infinity();
    hi[k] = -lo[k];
    for (const auto* t : front) {
      lo[k] = std::min(lo[k], objective(t, k));
      hi[k] = std::max(hi[k], objective(t, k));
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto* t : front) {
    double d2 = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double z = hi[k] > lo[k] ? (objective(t, k) - lo[k]) / (hi[k] - lo[k]) : 0.0;
      d2 += z * z;
    }
    if (d2 < best) {
      best = d2;
      res.chosen = t->id;
    }
  }
  res.trials = std::move(trials);
  return res;
}

nlohmann::json TuneResult::to_json() const {
  nlohmann::json ts = nlohmann::json::array();
  for (const auto& t : trials) ts.push_back(t.to_json());
  return {{"task", to_string(task)}, {"trials", ts}, {"pareto", pareto}, {"chosen", chosen}};
}

TuneResult tune(const TuneConfig& cfg, Task task, const TrialRunner& run, int workers) {
  auto trials = sample_trials(cfg);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < static_cast<int>(trials.size()); i = next++) {
      try {
        run(trials[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(workers, 1, cfg.trials);
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return pareto_select(std::move(trials), task);
}

TuneResult tune(const std::vector<FeaturizedGraph>& graphs, const ModelSpec& spec, const TrainConfig& config,
                const TuneConfig& cfg, int workers) {
  cfg.validate();
  config.validate();
  auto run = [&](Trial& t) {
    ModelSpec s = spec;
    s.hidden = t.hidden;
    s.dropout = t.dropout;
    TrainConfig c = config;
    c.batch_size = t.batch_size;
    c.seed = derive_seed(config.seed, 500 + t.id);
    std::atomic<bool> pruned{false};
    std::mutex reason_mutex;
    auto hook = [&](int fold, const EpochRecord& r) {
      if (pruned) return false;
      const double f1 = r.validation ? r.validation->f1 : 0.0;
      const double gap = r.validation ? std::abs(r.validation->loss - r.train_loss) : 0.0;
      if (should_prune(cfg, s.task, r.epoch, f1, gap)) {
        std::lock_guard lock(reason_mutex);
        if (!pruned) {
          pruned = true;
          t.prune_reason = fmt::format("fold {} epoch {}: F1 {:.4f}, loss gap {:.4f}", fold, r.epoch, f1, gap);
        }
        return false;
      }
      return true;
    };
    const CvResult cv = cross_validate(s, refs(graphs), c, 1, hook);
    t.pruned = pruned;
    double gap = 0.0;
    for (const auto& run_result : cv.runs) {
      const auto& last = run_result.history.back();
      gap += std::abs(last.validation->loss - last.train_loss);
    }
    t.loss_gap = gap / static_cast<double>(cv.runs.size());
    t.score = cv.mean_score();
    spdlog::info("trial {}: H={} dropout={:.3f} batch={} gap={:.4f} score={:.4f}{}", t.id, t.hidden, t.dropout,
                 t.batch_size, t.loss_gap, t.score, t.pruned ? " (pruned)" : "");
  };
  return tune(cfg, spec.task, run, workers);
}

}  // namespace molmp
