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

#include "molmp/trainpipe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <mutex>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <spdlog/spdlog.h>

#include "molmp/chemio.hpp"
#include "molmp/error.hpp"

namespace molmp {

namespace {

std::vector<double> labels_of(const GraphRefs& graphs) {
  std::vector<double> y;
  y.reserve(graphs.size());
  for (const auto* g : graphs) {
    if (!g->y) throw InputError("graph '" + g->name + "' has no label");
    y.push_back(*g->y);
  }
  return y;
}

std::map<double, std::vector<int>> by_class(std::span<const double> labels, bool stratify) {
  std::map<double, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) groups[stratify ? labels[i] : 0.0].push_back(i);
  return groups;
}

double stable_sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InputError("learning rate must be a finite non-negative number");
  if (!(clip_max_norm > 0.0)) throw InputError("clip norm must be positive");
  if (cv_folds < 2) throw InputError("cross-validation needs at least 2 folds");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InputError("validation fraction must be in [0, 1)");
  }
  if (augment_minority && task != Task::Classification) throw InputError("augmentation needs a classification task");
  if (sampler == Sampler::WeightedByClass && task != Task::Classification) {
    throw InputError("class-weighted sampling needs a classification task");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"clip_max_norm", clip_max_norm},
          {"sampler", sampler == Sampler::Uniform ? "uniform" : "weighted"},
          {"augment_minority", augment_minority},
          {"cv_folds", cv_folds},
          {"task", to_string(task)},
          {"validation_fraction", validation_fraction},
          {"plateau_scheduler", plateau_scheduler}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.clip_max_norm = j.value("clip_max_norm", c.clip_max_norm);
  const std::string sampler = j.value("sampler", std::string("uniform"));
  if (sampler == "uniform") {
    c.sampler = Sampler::Uniform;
  } else if (sampler == "weighted") {
    c.sampler = Sampler::WeightedByClass;
  } else {
    throw InputError("unknown sampler '" + sampler + "'");
  }
  c.augment_minority = j.value("augment_minority", c.augment_minority);
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  c.task = parse_task(j.value("task", std::string("classification")));
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.plateau_scheduler = j.value("plateau_scheduler", c.plateau_scheduler);
  c.validate();
  return c;
}

Confusion confusion(std::span<const double> probabilities, std::span<const double> labels, double threshold) {
  if (probabilities.size() != labels.size()) throw InputError("prediction and label counts differ");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    const bool actual = labels[i] >= 0.5;
    if (predicted && actual) ++c.tp;
    if (predicted && !actual) ++c.fp;
    if (!predicted && !actual) ++c.tn;
    if (!predicted && actual) ++c.fn;
  }
  return c;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw InputError("score and label counts differ");
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  for (double s : scores) {
    if (!std::isfinite(s)) throw InputError("non-finite score");
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  double pos = 0;
  double neg = 0;
  for (double y : labels) (y >= 0.5 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw InputError("AUC needs both classes");
  // Sweep thresholds from high to low; each block of tied scores moves the
  // ROC point diagonally, which the trapezoid credits with one half.
  double area = 0.0;
  double tp = 0;
  double fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    double dtp = 0;
    double dfp = 0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] >= 0.5 ? dtp : dfp) += 1;
    area += dfp * (tp + dtp / 2.0);
    tp += dtp;
    fp += dfp;
  }
  return area / (pos * neg);
}

double f1(const Confusion& c) noexcept {
  const double denom = c.tp + 0.5 * (c.fp + c.fn);
  return denom == 0.0 ? 0.0 : c.tp / denom;
}

double accuracy(const Confusion& c) noexcept {
  return c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / c.total();
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw InputError("prediction and target counts differ");
  if (predicted.empty()) throw InputError("RMSE of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (predicted[i] - truth[i]) * (predicted[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(truth.size()));
}

double youden_threshold(std::span<const double> scores, std::span<const double> labels) {
  std::vector<double> cuts(scores.begin(), scores.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.empty()) throw InputError("no scores");
  double best_j = -2.0;
  double best_t = cuts.front();
  for (double t : cuts) {
    const Confusion c = confusion(scores, labels, t);
    const double tpr = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fn);
    const double fpr = c.fp + c.tn == 0 ? 0.0 : static_cast<double>(c.fp) / (c.fp + c.tn);
    if (tpr - fpr > best_j) {
      best_j = tpr - fpr;
      best_t = t;
    }
  }
  return best_t;
}

double margin_of_error(std::span<const double> values, double confidence) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  return t * sd / std::sqrt(static_cast<double>(n));
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j = {{"task", to_string(task)}, {"n", n}, {"loss", loss}};
  if (task == Task::Classification) {
    j["auc"] = auc ? nlohmann::json(*auc) : nlohmann::json(nullptr);
    j["f1"] = f1;
    j["accuracy"] = accuracy;
    j["confusion"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn}, {"fn", counts.fn}};
  } else {
    j["rmse"] = rmse;
  }
  return j;
}

GraphRefs refs(const std::vector<FeaturizedGraph>& graphs) {
  GraphRefs r;
  r.reserve(graphs.size());
  for (const auto& g : graphs) r.push_back(&g);
  return r;
}

GraphRefs select(const std::vector<FeaturizedGraph>& graphs, std::span<const int> indices) {
  GraphRefs r;
  r.reserve(indices.size());
  for (int i : indices) r.push_back(&graphs.at(i));
  return r;
}

MetricsReport evaluate(Model& model, const GraphRefs& graphs, int batch_size) {
  if (graphs.empty()) throw InputError("nothing to evaluate");
  MetricsReport r;
  r.task = model.spec().task;
  r.n = static_cast<int>(graphs.size());
  const auto truth = labels_of(graphs);
  std::vector<double> raw;
  for (std::size_t lo = 0; lo < graphs.size(); lo += batch_size) {
    const std::size_t hi = std::min(graphs.size(), lo + batch_size);
    const auto part = model.predict_raw(make_batch(GraphRefs(graphs.begin() + lo, graphs.begin() + hi)));
    raw.insert(raw.end(), part.begin(), part.end());
  }
  if (r.task == Task::Classification) {
    std::vector<double> prob(raw.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      prob[i] = stable_sigmoid(raw[i]);
      loss += std::max(raw[i], 0.0) - raw[i] * truth[i] + std::log1p(std::exp(-std::abs(raw[i])));
    }
    r.loss = loss / static_cast<double>(raw.size());
    r.counts = confusion(prob, truth);
    r.f1 = f1(r.counts);
    r.accuracy = accuracy(r.counts);
    r.rmse = rmse(prob, truth);
    const bool both = std::any_of(truth.begin(), truth.end(), [](double y) { return y >= 0.5; }) &&
                      std::any_of(truth.begin(), truth.end(), [](double y) { return y < 0.5; });
    if (both) r.auc = auc(prob, truth);
  } else {
    r.rmse = rmse(raw, truth);
    r.loss = r.rmse * r.rmse;
  }
  return r;
}

Split holdout_split(std::span<const double> labels, double fraction, std::uint64_t seed, bool stratify) {
  if (labels.empty()) throw InputError("cannot split an empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("holdout fraction must be in (0, 1)");
  std::mt19937_64 rng(seed);
  Split s;
  for (auto& [cls, idx] : by_class(labels, stratify)) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<long>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<long>(n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Split blind_test_split(std::span<const double> labels, std::uint64_t seed, bool stratify) {
  return holdout_split(labels, 0.2, seed, stratify);
}

std::vector<Split> kfold(std::span<const double> labels, int k, std::uint64_t seed, bool stratify) {
  if (k < 2) throw InputError("k-fold needs k >= 2");
  if (static_cast<std::size_t>(k) > labels.size()) throw InputError("more folds than samples");
  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(labels.size());
  int next = 0;
  for (auto& [cls, idx] : by_class(labels, stratify)) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i : idx) fold_of[i] = next++ % k;
  }
  std::vector<Split> folds(k);
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    for (int f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

std::vector<double> class_weights(std::span<const double> labels) {
  std::map<double, int> counts;
  for (double y : labels) ++counts[y];
  if (counts.size() < 2) throw InputError("class weights need at least two classes");
  std::vector<double> w;
  w.reserve(labels.size());
  for (double y : labels) w.push_back(1.0 / counts[y]);
  return w;
}

std::vector<int> weighted_sample(std::span<const double> weights, int n, std::mt19937_64& rng) {
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::vector<int> out(n);
  for (int& i : out) i = pick(rng);
  return out;
}

std::vector<Record> augment_minority(const std::vector<Record>& records, std::uint64_t seed) {
  std::vector<int> pos;
  std::vector<int> neg;
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    const double y = records[i].label;
    if (y != 0.0 && y != 1.0) throw InputError("augmentation needs binary labels");
    (y == 1.0 ? pos : neg).push_back(i);
  }
  std::vector<Record> out = records;
  auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t gap = std::max(pos.size(), neg.size()) - minority.size();
  std::mt19937_64 rng(seed);
  std::shuffle(minority.begin(), minority.end(), rng);
  std::size_t added = 0;
  for (std::size_t k = 0; k < minority.size() && added < gap; ++k) {
    const Record& src = records[minority[k]];
    try {
      Record copy = src;
      copy.smiles = randomized_smiles(parse_smiles(src.smiles), rng());
      copy.name = src.name + "_aug";
      out.push_back(std::move(copy));
      ++added;
    } catch (const InputError& e) {
      spdlog::warn("augmentation skipped '{}': {}", src.name, e.what());
    }
  }
  return out;
}

std::vector<double> activity_threshold(std::span<const double> ic50_nm, double threshold_nm) {
  std::vector<double> y;
  y.reserve(ic50_nm.size());
  for (double v : ic50_nm) {
    if (!(v > 0.0)) throw InputError("IC50 values must be positive");
    y.push_back(v <= threshold_nm ? 1.0 : 0.0);
  }
  return y;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TrainResult train(Model& model, const GraphRefs& train_set, const GraphRefs& validation, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw InputError("empty training set");
  if (config.task != model.spec().task) throw InputError("training task does not match the model task");

  GraphRefs fit = train_set;
  GraphRefs val = validation;
  if (val.empty() && config.validation_fraction > 0.0) {
    const auto y = labels_of(train_set);
    const Split s = holdout_split(y, config.validation_fraction, derive_seed(config.seed, 7),
                                  config.task == Task::Classification);
    fit.clear();
    for (int i : s.train) fit.push_back(train_set[i]);
    for (int i : s.test) val.push_back(train_set[i]);
  }
  const auto y = labels_of(fit);
  std::vector<double> weights;
  if (config.sampler == Sampler::WeightedByClass) weights = class_weights(y);

  auto& store = model.params();
  tc::PlateauScheduler scheduler(config.lr);
  double lr = config.lr;
  std::mt19937_64 rng(derive_seed(config.seed, 1));
  TrainResult result;
  std::uint64_t step = 0;
  const int n = static_cast<int>(fit.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<int> order;
    if (config.sampler == Sampler::WeightedByClass) {
      order = weighted_sample(weights, n, rng);
    } else {
      order.resize(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
    }
    double loss_sum = 0.0;
    for (int lo = 0; lo < n; lo += config.batch_size) {
      const int hi = std::min(n, lo + config.batch_size);
      GraphRefs part;
      for (int k = lo; k < hi; ++k) part.push_back(fit[order[k]]);
      const Batch batch = make_batch(part);
      store.zero_grad();
      tc::Tape tape(true, derive_seed(config.seed, 1000 + step++));
      const auto out = model.forward(tape, batch);
      const tc::Var loss = config.task == Task::Classification ? tc::bce_with_logits(out.prediction, batch.labels)
                                                                : tc::mse(out.prediction, batch.labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw InvariantError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                             std::to_string(lo) + " (lr " + std::to_string(lr) + ")");
      }
      tape.backward(loss);
      store.clip_grad_norm(config.clip_max_norm);
      store.adam_step(lr);
      loss_sum += value * (hi - lo);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / n;
    rec.lr = lr;
    if (!val.empty()) rec.validation = evaluate(model, val);
    if (config.plateau_scheduler) lr = scheduler.step(rec.validation ? rec.validation->loss : rec.train_loss);
    spdlog::debug("epoch {} train loss {:.5f}{}", epoch, rec.train_loss,
                  rec.validation ? fmt::format(" val loss {:.5f} val score {:.4f}", rec.validation->loss,
                                               rec.validation->score())
                                 : std::string());
    result.history.push_back(rec);
    if (on_epoch && !on_epoch(rec)) {
      result.stopped = true;
      break;
    }
  }
  return result;
}

double CvResult::mean_score() const {
  if (folds.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : folds) s += f.score();
  return s / static_cast<double>(folds.size());
}

CvResult cross_validate(const ModelSpec& spec, const GraphRefs& graphs, const TrainConfig& config, int workers,
                        const FoldCallback& on_epoch) {
  config.validate();
  const auto y = labels_of(graphs);
  const auto folds = kfold(y, config.cv_folds, derive_seed(config.seed, 3), config.task == Task::Classification);
  CvResult res;
  res.folds.resize(folds.size());
  res.runs.resize(folds.size());
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int f = next++; f < static_cast<int>(folds.size()); f = next++) {
      try {
        GraphRefs tr;
        GraphRefs va;
        for (int i : folds[f].train) tr.push_back(graphs[i]);
        for (int i : folds[f].test) va.push_back(graphs[i]);
        Model model(spec, derive_seed(config.seed, 100 + f));
        TrainConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, 200 + f);
        fold_config.validation_fraction = 0.0;
        EpochCallback hook;
        if (on_epoch) hook = [&, f](const EpochRecord& r) { return on_epoch(f, r); };
        res.runs[f] = train(model, tr, va, fold_config, hook);
        res.folds[f] = evaluate(model, va);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(workers, 1, static_cast<int>(folds.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return res;
}

}  // namespace molmp
