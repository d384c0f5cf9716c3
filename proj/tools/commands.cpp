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
#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "config.hpp"
#include "data.hpp"
#include "json.hpp"
#include "molmp/diversity.hpp"
#include "molmp/elements.hpp"
#include "molmp/error.hpp"
#include "molmp/optim.hpp"
#include "molmp/selectune.hpp"
#include "svg.hpp"

namespace molmp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by the training-style commands. Unset flags leave the
// config-file (or default) value in place.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> out;
  std::optional<std::string> variant;
  std::optional<std::string> task;
  std::optional<std::string> sampler;
  std::optional<std::string> seeds;
  std::optional<std::string> exclude;
  std::optional<int> hidden;
  std::optional<int> heads;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<int> cv_folds;
  std::optional<int> workers;
  std::optional<int> trials;
  std::optional<double> dropout;
  std::optional<double> lr;
  std::optional<double> clip;
  std::optional<double> validation_fraction;
  std::optional<double> blind_fraction;
};

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  return app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

void add_model_flags(CLI::App* app, Flags& f) {
  flag(app, "--variant", f.variant, "model variant (MP, AMP, UMP, AUMP, BMP, BMP_SN, CBMP, ABMP, ABMP_SN)");
  flag(app, "--hidden", f.hidden, "hidden channels");
  flag(app, "--dropout", f.dropout, "dropout probability");
  flag(app, "--heads", f.heads, "attention heads");
  flag(app, "--task", f.task, "classification or regression");
  flag(app, "--lr", f.lr, "Adam learning rate");
  flag(app, "--batch-size", f.batch_size, "minibatch size");
  flag(app, "--epochs", f.epochs, "training epochs");
  flag(app, "--clip", f.clip, "gradient-norm clipping bound");
  flag(app, "--sampler", f.sampler, "uniform or weighted");
  flag(app, "--cv-folds", f.cv_folds, "cross-validation folds");
  flag(app, "--validation-fraction", f.validation_fraction, "internal validation fraction of the training part");
  flag(app, "--seeds", f.seeds, "comma-separated seeds");
  flag(app, "--blind-fraction", f.blind_fraction, "blind-test fraction");
  flag(app, "--exclude", f.exclude, "comma-separated features to drop");
}

void add_common_flags(CLI::App* app, Flags& f) {
  flag(app, "--config", f.config, "INI run configuration; flags override it");
  flag(app, "--out", f.out, "output directory");
  flag(app, "--workers", f.workers, "worker threads");
}

RunConfig resolve(const std::string& command, const Flags& f) {
  RunConfig c;
  if (f.config) c = RunConfig::from_ini(read_text(*f.config));
  c.command = command;
  if (f.dataset) c.datasets = {*f.dataset};
  if (f.out) c.output = *f.out;
  if (f.variant) c.model.variant = parse_variant(*f.variant);
  if (f.task) c.train.task = parse_task(*f.task);
  c.model.task = c.train.task;
  if (f.sampler) c.train.sampler = parse_sampler(*f.sampler);
  if (f.seeds) c.seeds = parse_seeds(*f.seeds);
  if (f.exclude) c.exclude_features = split_list(*f.exclude);
  if (f.hidden) c.model.hidden = *f.hidden;
  if (f.heads) c.model.heads = *f.heads;
  if (f.dropout) c.model.dropout = *f.dropout;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.cv_folds) c.train.cv_folds = *f.cv_folds;
  if (f.lr) c.train.lr = *f.lr;
  if (f.clip) c.train.clip_max_norm = *f.clip;
  if (f.validation_fraction) c.train.validation_fraction = *f.validation_fraction;
  if (f.blind_fraction) c.blind_fraction = *f.blind_fraction;
  if (f.workers) c.workers = *f.workers;
  if (f.trials) c.tune.trials = *f.trials;
  if (c.datasets.empty()) throw InputError("no dataset given");
  if (c.output.empty()) throw InputError("no output directory given (--out)");
  c.validate();
  return c;
}

// Hash of the settings that determine results (output path and worker
// count excluded).
std::string settings_hash(const RunConfig& c) {
  RunConfig k = c;
  k.output.clear();
  k.workers = 1;
  return git_blob_hash(k.to_ini());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Reproducibility manifest written into every run directory.
void write_manifest(const RunConfig& c, const std::string& manifest_hash) {
  json inputs = json::array();
  for (const auto& d : c.datasets) inputs.push_back({{"path", d}, {"git_blob", git_blob_hash_file(d)}});
  write_text(fs::path(c.output) / "run.ini", c.to_ini());
  write_json(fs::path(c.output) / "manifest.json", {{"command", c.command},
                                                    {"config", c.to_json()},
                                                    {"settings_hash", settings_hash(c)},
                                                    {"seeds", c.seeds},
                                                    {"inputs", inputs},
                                                    {"feature_manifest_hash", manifest_hash},
                                                    {"version", kVersion}});
}

struct Dataset {
  GraphCache cache;
  FeatureMask mask;
  std::vector<FeaturizedGraph> graphs;  // with `mask` applied
};

Dataset load_dataset(const std::string& path, const std::vector<std::string>& exclude) {
  Dataset d;
  d.cache = read_cache(path);
  d.mask = d.cache.mask;
  for (const auto& name : exclude) {
    const int i = d.cache.manifest.index_of(name);
    if (i < 0) throw InputError("unknown feature '" + name + "'");
    if (!d.mask[i]) throw InputError("feature '" + name + "' is not active in '" + path + "'");
    d.mask[i] = false;
  }
  d.graphs.reserve(d.cache.graphs.size());
  for (const auto& g : d.cache.graphs) d.graphs.push_back(apply_mask(g, d.cache.manifest, d.mask));
  if (d.graphs.empty()) throw InputError("'" + path + "' holds no graphs");
  return d;
}

std::vector<double> labels_of(const std::vector<FeaturizedGraph>& graphs) {
  std::vector<double> y;
  for (const auto& g : graphs) {
    if (!g.y) throw InputError("graph '" + g.name + "' has no label");
    y.push_back(*g.y);
  }
  return y;
}

ModelSpec sized(ModelSpec spec, const FeaturizedGraph& g) {
  spec.atom_features = g.x.cols;
  spec.bond_features = g.edge_attr.cols;
  spec.global_features = static_cast<int>(g.u.size());
  return spec;
}

json aggregate(const std::vector<MetricsReport>& reports) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports) {
    if (r.task == Task::Classification) {
      if (r.auc) values["auc"].push_back(*r.auc);
      values["f1"].push_back(r.f1);
      values["accuracy"].push_back(r.accuracy);
    } else {
      values["rmse"].push_back(r.rmse);
    }
    values["loss"].push_back(r.loss);
  }
  json out = json::object();
  for (const auto& [name, v] : values) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    out[name] = {{"mean", mean}, {"moe95", margin_of_error(v, 0.95)}, {"values", v}};
  }
  return out;
}

std::string summary_line(const json& agg) {
  std::string s;
  for (const auto& [name, m] : agg.items()) {
    s += fmt::format("{}{} {:.4f} +/- {:.4f}", s.empty() ? "" : ", ", name, m["mean"].get<double>(),
                     m["moe95"].get<double>());
  }
  return s;
}

struct SeedRun {
  MetricsReport test;
  MetricsReport train;
  Split split;
  TrainResult history;
};

SeedRun train_one(Model& model, const std::vector<FeaturizedGraph>& graphs, const std::vector<double>& y,
                  const RunConfig& c, std::uint64_t seed) {
  SeedRun r;
  r.split = holdout_split(y, c.blind_fraction, seed, c.train.task == Task::Classification);
  TrainConfig tc = c.train;
  tc.seed = seed;
  r.history = train(model, select(graphs, r.split.train), {}, tc);
  r.test = evaluate(model, select(graphs, r.split.test));
  r.train = evaluate(model, select(graphs, r.split.train));
  return r;
}

json checkpoint_meta(const Model& model, const GraphCache& cache, const FeatureMask& mask, std::uint64_t seed) {
  return {{"spec", model.spec().to_json()},
          {"feature_manifest", json::parse(cache.manifest.to_json())},
          {"feature_manifest_hash", cache.manifest.hash()},
          {"mask", mask},
          {"mode", cache.mode},
          {"seed", seed},
          {"version", kVersion}};
}

int cmd_featurize(const std::string& input, const std::string& output, const std::string& mode_text,
                  const std::optional<std::string>& exclude, const std::string& label_column,
                  const std::optional<double>& ic50, bool no_standardize, bool augment, std::uint64_t seed,
                  int workers) {
  LoadOptions load;
  load.label_column = label_column;
  load.ic50_threshold = ic50;
  load.standardize = !no_standardize;
  const auto mode = FeaturizeMode::parse(mode_text);
  LoadResult in = load_molecules(input, load);
  if (augment) {
    if (in.format != SourceFormat::Smiles) throw InputError("minority augmentation needs SMILES input");
    std::vector<Record> records;
    for (const auto& m : in.molecules) {
      if (!m.label) throw InputError("minority augmentation needs a label on every row");
      records.push_back({m.name, m.source, *m.label});
    }
    const auto augmented = augment_minority(records, seed);
    for (std::size_t i = records.size(); i < augmented.size(); ++i) {
      InputMolecule im;
      im.row = static_cast<int>(i + 2);
      im.name = augmented[i].name;
      im.source = augmented[i].smiles;
      im.molecule = reparse(im.source, SourceFormat::Smiles, load.standardize);
      im.label = augmented[i].label;
      in.molecules.push_back(std::move(im));
    }
    spdlog::info("minority augmentation added {} molecules", augmented.size() - records.size());
  }
  const auto& manifest = FeatureManifest::standard();
  const FeatureMask mask = exclude ? mask_without(manifest, split_list(*exclude)) : full_mask(manifest);
  auto rep = featurize_all(in, load, mask, mode, seed, workers);
  if (rep.cache.graphs.empty()) throw InputError("no molecule of '" + input + "' could be featurized");
  write_cache(output, rep.cache);
  const int skipped = in.skipped + rep.skipped;
  spdlog::info("wrote {} graphs to '{}' ({} skipped)", rep.cache.graphs.size(), output, skipped);
  std::cout << fmt::format("featurized {} molecules ({} skipped) in mode {}\n", rep.cache.graphs.size(), skipped,
                           rep.cache.mode);
  return 0;
}

int cmd_train(const RunConfig& c) {
  const Dataset d = load_dataset(c.datasets.front(), c.exclude_features);
  const auto y = labels_of(d.graphs);
  const ModelSpec spec = sized(c.model, d.graphs.front());
  fs::create_directories(c.output);
  write_manifest(c, d.cache.manifest.hash());
  const std::string hash = settings_hash(c);
  std::vector<MetricsReport> tests;
  for (std::uint64_t seed : c.seeds) {
    Model model(spec, seed);
    const SeedRun r = train_one(model, d.graphs, y, c, seed);
    tests.push_back(r.test);
    const fs::path dir = fs::path(c.output) / fmt::format("seed_{}", seed);
    fs::create_directories(dir);
    {
      std::ofstream ck(dir / "checkpoint.bin", std::ios::binary);
      if (!ck) throw InputError("cannot write checkpoint in '" + dir.string() + "'");
      tc::write_checkpoint(ck, checkpoint_meta(model, d.cache, d.mask, seed), model.params());
    }
    write_json(dir / "metrics.json", {{"seed", seed},
                                      {"variant", to_string(spec.variant)},
                                      {"settings_hash", hash},
                                      {"feature_manifest_hash", d.cache.manifest.hash()},
                                      {"epochs_run", r.history.history.size()},
                                      {"test", r.test.to_json()},
                                      {"train", r.train.to_json()}});
    write_json(dir / "split.json", {{"train", r.split.train}, {"test", r.split.test}});
    std::string hist = "epoch,train_loss,lr\n";
    for (const auto& e : r.history.history) hist += fmt::format("{},{},{}\n", e.epoch, e.train_loss, e.lr);
    write_text(dir / "history.csv", hist);
    spdlog::info("seed {}: test {}", seed, r.test.to_json().dump());
  }
  const json agg = aggregate(tests);
  write_json(fs::path(c.output) / "aggregate.json",
             {{"variant", to_string(spec.variant)}, {"seeds", c.seeds}, {"settings_hash", hash}, {"test", agg}});
  std::cout << fmt::format("{} over {} seeds: {}\n", to_string(spec.variant), c.seeds.size(), summary_line(agg));
  return 0;
}

struct Loaded {
  Model model;
  json meta;
};

Loaded load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint '" + path + "'");
  const auto ckpt = tc::read_checkpoint(in);
  Loaded l{Model(ModelSpec::from_json(ckpt.meta.at("spec")), 0), ckpt.meta};
  tc::load_into(ckpt, l.model.params());
  return l;
}

// Graphs of `cache_path` masked like the checkpoint's training data.
Dataset compatible(const Loaded& l, const std::string& cache_path) {
  Dataset d;
  d.cache = read_cache(cache_path);
  if (d.cache.manifest.hash() != l.meta.at("feature_manifest_hash").get<std::string>()) {
    throw InputError("feature manifest hash of '" + cache_path + "' does not match the checkpoint");
  }
  if (d.cache.mode != l.meta.value("mode", d.cache.mode)) {
    spdlog::warn("'{}' was featurized in mode {} but the checkpoint was trained on mode {}", cache_path,
                 d.cache.mode, l.meta.at("mode").get<std::string>());
  }
  d.mask = l.meta.at("mask").get<FeatureMask>();
  for (std::size_t i = 0; i < d.mask.size(); ++i) {
    if (d.mask[i] && !d.cache.mask[i]) {
      throw InputError("the checkpoint uses feature '" + d.cache.manifest[static_cast<int>(i)].name +
                       "', which '" + cache_path + "' lacks");
    }
  }
  for (const auto& g : d.cache.graphs) d.graphs.push_back(apply_mask(g, d.cache.manifest, d.mask));
  if (d.graphs.empty()) throw InputError("'" + cache_path + "' holds no graphs");
  const auto& spec = l.model.spec();
  const auto& g = d.graphs.front();
  if (g.x.cols != spec.atom_features || g.edge_attr.cols != spec.bond_features ||
      static_cast<int>(g.u.size()) != spec.global_features) {
    throw InputError("feature widths of '" + cache_path + "' do not match the checkpoint");
  }
  return d;
}

std::vector<int> split_part(const std::string& split_path, const std::string& part, int n) {
  json j;
  try {
    j = json::parse(read_text(split_path));
  } catch (const json::exception& e) {
    throw InputError("'" + split_path + "' is not valid JSON");
  }
  if (!j.contains(part)) throw InputError("'" + split_path + "' has no '" + part + "' part");
  auto idx = j.at(part).get<std::vector<int>>();
  for (int i : idx) {
    if (i < 0 || i >= n) throw InputError("split index " + std::to_string(i) + " is out of range");
  }
  return idx;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& cache, const std::optional<std::string>& split,
                 const std::string& part, const std::optional<std::string>& out) {
  Loaded l = load_model(checkpoint);
  const Dataset d = compatible(l, cache);
  labels_of(d.graphs);
  GraphRefs graphs = refs(d.graphs);
  if (split) graphs = select(d.graphs, split_part(*split, part, static_cast<int>(d.graphs.size())));
  const auto report = evaluate(l.model, graphs);
  const std::string text = report.to_json().dump(2) + "\n";
  if (out) {
    write_text(*out, text);
  } else {
    std::cout << text;
  }
  return 0;
}

std::vector<double> predictions(Model& model, const std::vector<FeaturizedGraph>& graphs) {
  std::vector<double> out;
  constexpr std::size_t kChunk = 256;
  for (std::size_t s = 0; s < graphs.size(); s += kChunk) {
    std::vector<const FeaturizedGraph*> part;
    for (std::size_t i = s; i < std::min(graphs.size(), s + kChunk); ++i) part.push_back(&graphs[i]);
    const auto p = model.predict(make_batch(part));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

int cmd_predict(const std::string& checkpoint, const std::string& cache, const std::string& out) {
  Loaded l = load_model(checkpoint);
  const Dataset d = compatible(l, cache);
  const auto p = predictions(l.model, d.graphs);
  const bool cls = l.model.spec().task == Task::Classification;
  std::string csv = cls ? "name,probability\n" : "name,value\n";
  for (std::size_t i = 0; i < p.size(); ++i) csv += fmt::format("{},{}\n", csv_escape(d.graphs[i].name), p[i]);
  write_text(out, csv);
  std::cout << fmt::format("wrote {} predictions to {}\n", p.size(), out);
  return 0;
}

std::string file_stem(const std::string& name, std::size_t index) {
  std::string s;
  for (char c : name) s += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return fmt::format("{:04d}_{}", index, s.empty() ? "molecule" : s.substr(0, 60));
}

int cmd_relevance(const std::string& checkpoint, const std::string& cache, const std::string& out,
                  const std::optional<std::string>& svg_dir, const std::optional<std::string>& pair_table) {
  Loaded l = load_model(checkpoint);
  const Dataset d = compatible(l, cache);
  std::string csv = "molecule,atom_index,element,score\n";
  std::vector<double> sums;
  std::vector<int> sizes;
  for (std::size_t i = 0; i < d.graphs.size(); ++i) {
    const auto& g = d.graphs[i];
    const Molecule m = reparse(d.cache.sources[i], d.cache.format, d.cache.standardized);
    if (m.atom_count() != g.n_atoms) {
      throw InputError(fmt::format("'{}' re-parses to {} atoms but its cached graph has {}", g.name, m.atom_count(),
                                   g.n_atoms));
    }
    const Batch b = make_batch(std::vector<const FeaturizedGraph*>{&g});
    const auto raw = l.model.node_scores(b).front();
    const auto scores = min_max(raw);
    sums.push_back(std::accumulate(raw.begin(), raw.end(), 0.0));
    sizes.push_back(g.n_atoms);
    for (int a = 0; a < g.n_atoms; ++a) {
      csv += fmt::format("{},{},{},{}\n", csv_escape(g.name), a, elements::symbol(m.atoms[a].element), scores[a]);
    }
    if (svg_dir) {
      Molecule named = m;
      named.name = g.name;
      write_text(fs::path(*svg_dir) / (file_stem(g.name, i) + ".svg"), relevance_svg(named, scores, g.name));
    }
  }
  write_text(out, csv);
  if (pair_table) {
    if (d.graphs.size() % 2 != 0) throw InputError("the pair table needs an even number of molecules");
    std::string t = "molecule_a,molecule_b,sum_a,sum_b,difference\n";
    for (std::size_t i = 0; i + 1 < d.graphs.size(); i += 2) {
      if (sizes[i] != sizes[i + 1]) {
        throw InputError("paired molecules '" + d.graphs[i].name + "' and '" + d.graphs[i + 1].name +
                         "' differ in atom count");
      }
      t += fmt::format("{},{},{},{},{}\n", csv_escape(d.graphs[i].name), csv_escape(d.graphs[i + 1].name), sums[i],
                       sums[i + 1], std::abs(sums[i] - sums[i + 1]));
    }
    write_text(*pair_table, t);
  }
  std::cout << fmt::format("wrote relevance scores for {} molecules to {}\n", d.graphs.size(), out);
  return 0;
}

int cmd_select(const RunConfig& c, const std::optional<std::string>& candidates_text) {
  const Dataset d = load_dataset(c.datasets.front(), c.exclude_features);
  labels_of(d.graphs);
  std::vector<std::string> candidates =
      candidates_text ? split_list(*candidates_text) : active_names(d.cache.manifest, d.mask);
  TrainConfig tc = c.train;
  tc.seed = c.seeds.front();
  fs::create_directories(c.output);
  write_manifest(c, d.cache.manifest.hash());
  const auto res = select_features(d.graphs, d.cache.manifest, candidates, sized(c.model, d.graphs.front()), tc,
                                   c.workers);
  write_text(fs::path(c.output) / "ranking.csv", res.ranking_csv());
  write_json(fs::path(c.output) / "selection.json", res.to_json());
  std::cout << fmt::format("selected {} of {} features (CV score {:.4f} -> {:.4f}); eliminated: {}\n",
                           res.selected.size(), candidates.size(), res.initial_score, res.final_score,
                           fmt::join(res.eliminated, ","));
  return 0;
}

int cmd_tune(const RunConfig& c) {
  const Dataset d = load_dataset(c.datasets.front(), c.exclude_features);
  labels_of(d.graphs);
  TrainConfig tc = c.train;
  tc.seed = c.seeds.front();
  TuneConfig tune = c.tune;
  tune.seed = c.seeds.front();
  fs::create_directories(c.output);
  write_manifest(c, d.cache.manifest.hash());
  const auto res = molmp::tune(d.graphs, sized(c.model, d.graphs.front()), tc, tune, c.workers);
  write_json(fs::path(c.output) / "tune.json", res.to_json());
  const auto& best = res.trials.at(res.chosen);
  std::cout << fmt::format("{} trials, {} on the Pareto front; chosen hidden={} dropout={:.3f} batch_size={}\n",
                           res.trials.size(), res.pareto.size(), best.hidden, best.dropout, best.batch_size);
  return 0;
}

int cmd_diversity(const std::string& input, const std::string& out, double threshold, int bits, int workers) {
  LoadOptions load;
  const auto in = load_molecules(input, load);
  if (in.molecules.empty()) throw InputError("no molecules in '" + input + "'");
  std::vector<Molecule> mols;
  for (const auto& m : in.molecules) mols.push_back(m.molecule);
  const auto report = cluster(fingerprints(mols, workers, bits), threshold);
  std::string csv = "molecule,cluster\n";
  for (std::size_t i = 0; i < mols.size(); ++i) {
    csv += fmt::format("{},{}\n", csv_escape(in.molecules[i].name), report.assignment[i]);
  }
  write_text(fs::path(out) / "clusters.csv", csv);
  write_json(fs::path(out) / "summary.json", report.summary());
  std::cout << report.summary().dump() << "\n";
  return 0;
}

int cmd_ablate3d(const RunConfig& c, double sigma, std::uint64_t noise_seed) {
  LoadOptions load;
  LoadResult in = load_molecules(c.datasets.front(), load);
  // Every arm uses the same molecules: those with coordinates.
  const auto before = in.molecules.size();
  std::erase_if(in.molecules, [](const InputMolecule& m) { return !m.molecule.has_3d; });
  if (in.molecules.size() < before) {
    spdlog::warn("{} molecules without 3D coordinates left out of every arm", before - in.molecules.size());
  }
  if (in.molecules.empty()) throw InputError("no molecules with 3D coordinates in '" + c.datasets.front() + "'");
  const auto& manifest = FeatureManifest::standard();
  const FeatureMask mask = mask_without(manifest, c.exclude_features);
  const std::vector<FeaturizeMode> arms = {FeaturizeMode::parse("2d"), FeaturizeMode::parse("3d"),
                                           FeaturizeMode{FeaturizeMode::Noisy3d, sigma}};
  fs::create_directories(c.output);
  write_manifest(c, manifest.hash());
  const bool cls = c.train.task == Task::Classification;
  std::string csv = cls ? "arm,seed,auc,f1,accuracy\n" : "arm,seed,rmse\n";
  json summary = json::object();
  for (const auto& arm : arms) {
    auto rep = featurize_all(in, load, mask, arm, noise_seed, c.workers);
    if (rep.skipped > 0) throw InvariantError("an ablation arm dropped molecules");
    const auto& graphs = rep.cache.graphs;
    const auto y = labels_of(graphs);
    std::vector<MetricsReport> tests;
    for (std::uint64_t seed : c.seeds) {
      Model model(sized(c.model, graphs.front()), seed);
      const auto r = train_one(model, graphs, y, c, seed);
      tests.push_back(r.test);
      csv += cls ? fmt::format("{},{},{},{},{}\n", arm.to_string(), seed, r.test.auc ? fmt::format("{}", *r.test.auc) : "",
                               r.test.f1, r.test.accuracy)
                 : fmt::format("{},{},{}\n", arm.to_string(), seed, r.test.rmse);
    }
    summary[arm.to_string()] = aggregate(tests);
    std::cout << fmt::format("{:>12}: {}\n", arm.to_string(), summary_line(summary[arm.to_string()]));
  }
  write_text(fs::path(c.output) / "ablation.csv", csv);
  write_json(fs::path(c.output) / "ablation.json", {{"variant", to_string(c.model.variant)}, {"arms", summary}});
  return 0;
}

spdlog::level::level_enum parse_level(const std::string& s) {
  const auto level = spdlog::level::from_str(s);
  if (level == spdlog::level::off && s != "off") throw InputError("unknown log level '" + s + "'");
  return level;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Message-passing neural networks for molecular property prediction", "molmp"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  // featurize
  auto* feat = app.add_subcommand("featurize", "CSV or SDF to a binary graph cache");
  std::string f_input, f_output, f_mode = "2d", f_label = "label";
  std::optional<std::string> f_exclude;
  std::optional<double> f_ic50;
  bool f_no_std = false, f_augment = false;
  std::uint64_t f_seed = 0;
  int f_workers = 1;
  feat->add_option("--input", f_input, "name,smiles,label CSV or SD file")->required();
  feat->add_option("--output", f_output, "graph cache to write")->required();
  feat->add_option("--mode", f_mode, "2d, 3d or noisy3d:<sigma>");
  flag(feat, "--exclude", f_exclude, "comma-separated features to drop");
  feat->add_option("--label-column", f_label, "label column (CSV) or data item (SDF)");
  flag(feat, "--ic50-threshold", f_ic50, "treat labels as IC50 in nM; 1 when at or below this value");
  feat->add_flag("--no-standardize", f_no_std, "keep hydrogens, fragments and group forms as written");
  feat->add_flag("--augment-minority", f_augment, "append randomized-SMILES copies of the minority class");
  feat->add_option("--seed", f_seed, "seed for coordinate noise and augmentation");
  feat->add_option("--workers", f_workers, "worker threads");

  // train, select-features, tune, ablate3d share the run flags.
  Flags tr, sel, tun, abl;
  auto* train_cmd = app.add_subcommand("train", "train and blind-test one variant over several seeds");
  flag(train_cmd, "--cache", tr.dataset, "graph cache");
  add_common_flags(train_cmd, tr);
  add_model_flags(train_cmd, tr);

  auto* select_cmd = app.add_subcommand("select-features", "cross-validated backward feature selection");
  std::optional<std::string> candidates;
  flag(select_cmd, "--cache", sel.dataset, "graph cache");
  flag(select_cmd, "--candidates", candidates, "comma-separated candidate features (default: all active)");
  add_common_flags(select_cmd, sel);
  add_model_flags(select_cmd, sel);

  auto* tune_cmd = app.add_subcommand("tune", "random-search tuning with pruning and Pareto selection");
  flag(tune_cmd, "--cache", tun.dataset, "graph cache");
  flag(tune_cmd, "--trials", tun.trials, "number of trials");
  add_common_flags(tune_cmd, tun);
  add_model_flags(tune_cmd, tun);

  auto* abl_cmd = app.add_subcommand("ablate3d", "compare 2D, 3D and noisy-3D featurization");
  double a_sigma = 0.5;
  std::uint64_t a_noise_seed = 0;
  flag(abl_cmd, "--input", abl.dataset, "SD file with 3D coordinates and a label data item");
  abl_cmd->add_option("--sigma", a_sigma, "coordinate noise (Angstrom)");
  abl_cmd->add_option("--noise-seed", a_noise_seed, "seed for the coordinate noise");
  add_common_flags(abl_cmd, abl);
  add_model_flags(abl_cmd, abl);

  // evaluate, predict, relevance
  std::string e_ckpt, e_cache, e_part = "test";
  std::optional<std::string> e_split, e_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a graph cache");
  eval_cmd->add_option("--checkpoint", e_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--cache", e_cache, "graph cache")->required();
  flag(eval_cmd, "--split", e_split, "split.json of a training run");
  eval_cmd->add_option("--part", e_part, "train or test (with --split)");
  flag(eval_cmd, "--out", e_out, "metrics JSON (default: stdout)");

  std::string p_ckpt, p_cache, p_out;
  auto* pred_cmd = app.add_subcommand("predict", "per-molecule predictions as CSV");
  pred_cmd->add_option("--checkpoint", p_ckpt, "checkpoint file")->required();
  pred_cmd->add_option("--cache", p_cache, "graph cache")->required();
  pred_cmd->add_option("--out", p_out, "CSV to write")->required();

  std::string r_ckpt, r_cache, r_out;
  std::optional<std::string> r_svg, r_pairs;
  auto* rel_cmd = app.add_subcommand("relevance", "per-atom relevance scores");
  rel_cmd->add_option("--checkpoint", r_ckpt, "checkpoint file")->required();
  rel_cmd->add_option("--cache", r_cache, "graph cache")->required();
  rel_cmd->add_option("--out", r_out, "CSV to write")->required();
  flag(rel_cmd, "--svg-dir", r_svg, "also write one SVG colormap per molecule");
  flag(rel_cmd, "--pair-table", r_pairs, "CSV of summed raw node outputs for consecutive molecule pairs");

  std::string d_input, d_out;
  double d_threshold = 0.70;
  int d_bits = 2048, d_workers = 1;
  auto* div_cmd = app.add_subcommand("diversity", "fingerprint clustering and entropy");
  div_cmd->add_option("--input", d_input, "CSV or SD file")->required();
  div_cmd->add_option("--out", d_out, "output directory")->required();
  div_cmd->add_option("--threshold", d_threshold, "Tanimoto similarity threshold");
  div_cmd->add_option("--bits", d_bits, "fingerprint width");
  div_cmd->add_option("--workers", d_workers, "worker threads");

  std::vector<std::string> argv = args;
  std::reverse(argv.begin(), argv.end());
  try {
    try {
      app.parse(argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;
    }
    spdlog::set_level(parse_level(log_level));
    if (*feat) {
      return cmd_featurize(f_input, f_output, f_mode, f_exclude, f_label, f_ic50, f_no_std, f_augment, f_seed,
                           f_workers);
    }
    if (*train_cmd) return cmd_train(resolve("train", tr));
    if (*select_cmd) return cmd_select(resolve("select-features", sel), candidates);
    if (*tune_cmd) return cmd_tune(resolve("tune", tun));
    if (*abl_cmd) return cmd_ablate3d(resolve("ablate3d", abl), a_sigma, a_noise_seed);
    if (*eval_cmd) return cmd_evaluate(e_ckpt, e_cache, e_split, e_part, e_out);
    if (*pred_cmd) return cmd_predict(p_ckpt, p_cache, p_out);
    if (*rel_cmd) return cmd_relevance(r_ckpt, r_cache, r_out, r_svg, r_pairs);
    if (*div_cmd) return cmd_diversity(d_input, d_out, d_threshold, d_bits, d_workers);
    return 1;
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const json::exception& e) {
    spdlog::error("malformed JSON: {}", e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const InvariantError& e) {
    spdlog::error("internal error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace molmp::cli
