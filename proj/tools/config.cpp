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
#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "molmp/error.hpp"

namespace molmp::cli {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& s : split_list(text)) {
    std::size_t used = 0;
    try {
      out.push_back(std::stoull(s, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s[0] == '-') throw InputError("bad seed '" + s + "'");
  }
  return out;
}

Sampler parse_sampler(const std::string& text) {
  if (text == "uniform") return Sampler::Uniform;
  if (text == "weighted") return Sampler::WeightedByClass;
  throw InputError("unknown sampler '" + text + "' (expected uniform or weighted)");
}

std::string to_string(Sampler s) { return s == Sampler::Uniform ? "uniform" : "weighted"; }

void RunConfig::validate() const {
  for (const auto& d : datasets) {
    if (!std::filesystem::exists(d)) throw InputError("dataset '" + d + "' does not exist");
  }
  if (seeds.empty()) throw InputError("the seed list is empty");
  if (!(blind_fraction > 0.0 && blind_fraction < 1.0)) throw InputError("blind_fraction must lie in (0, 1)");
  if (workers < 1) throw InputError("workers must be at least 1");
  model.validate();
  train.validate();
  tune.validate();
}

std::string RunConfig::to_ini() const {
  std::ostringstream o;
  o << "[run]\n"
    << "command = " << command << '\n'
    << "datasets = " << fmt::format("{}", fmt::join(datasets, ",")) << '\n'
    << "output = " << output << '\n'
    << "seeds = " << fmt::format("{}", fmt::join(seeds, ",")) << '\n'
    << "blind_fraction = " << fmt::format("{}", blind_fraction) << '\n'
    << "workers = " << workers << "\n\n";
  o << "[model]\n"
    << "variant = " << molmp::to_string(model.variant) << '\n'
    << "hidden = " << model.hidden << '\n'
    << "dropout = " << fmt::format("{}", model.dropout) << '\n'
    << "heads = " << model.heads << '\n'
    << "leaky_slope = " << fmt::format("{}", model.leaky_slope) << "\n\n";
  o << "[train]\n"
    << "task = " << molmp::to_string(train.task) << '\n'
    << "lr = " << fmt::format("{}", train.lr) << '\n'
    << "batch_size = " << train.batch_size << '\n'
    << "epochs = " << train.epochs << '\n'
    << "clip_max_norm = " << fmt::format("{}", train.clip_max_norm) << '\n'
    << "sampler = " << to_string(train.sampler) << '\n'
    << "cv_folds = " << train.cv_folds << '\n'
    << "validation_fraction = " << fmt::format("{}", train.validation_fraction) << '\n'
    << "plateau_scheduler = " << (train.plateau_scheduler ? "true" : "false") << "\n\n";
  o << "[features]\n"
    << "exclude = " << fmt::format("{}", fmt::join(exclude_features, ",")) << "\n\n";
  o << "[tune]\n"
    << "trials = " << tune.trials << '\n'
    << "hidden_min = " << tune.hidden_min << '\n'
    << "hidden_max = " << tune.hidden_max << '\n'
    << "dropout_min = " << fmt::format("{}", tune.dropout_min) << '\n'
    << "dropout_max = " << fmt::format("{}", tune.dropout_max) << '\n'
    << "batch_min = " << tune.batch_min << '\n'
    << "batch_max = " << tune.batch_max << '\n';
  return o.str();
}

RunConfig RunConfig::from_ini(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError("config: " + std::string(e.what()));
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"run", {"command", "datasets", "output", "seeds", "blind_fraction", "workers"}},
      {"model", {"variant", "hidden", "dropout", "heads", "leaky_slope"}},
      {"train",
       {"task", "lr", "batch_size", "epochs", "clip_max_norm", "sampler", "cv_folds", "validation_fraction",
        "plateau_scheduler"}},
      {"features", {"exclude"}},
      {"tune", {"trials", "hidden_min", "hidden_max", "dropout_min", "dropout_max", "batch_min", "batch_max"}}};
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw InputError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw InputError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }
  RunConfig c;
  auto get = [&](const std::string& path, auto fallback) {
    try {
      if (!tree.get_child_optional(path)) return fallback;
      return tree.get<decltype(fallback)>(path);
    } catch (const pt::ptree_bad_data&) {
      throw InputError("config: bad value for '" + path + "'");
    }
  };
  c.command = get("run.command", c.command);
  c.datasets = split_list(get("run.datasets", std::string()));
  c.output = get("run.output", c.output);
  if (auto s = tree.get_optional<std::string>("run.seeds")) c.seeds = parse_seeds(*s);
  c.blind_fraction = get("run.blind_fraction", c.blind_fraction);
  c.workers = get("run.workers", c.workers);
  if (auto v = tree.get_optional<std::string>("model.variant")) c.model.variant = parse_variant(*v);
  c.model.hidden = get("model.hidden", c.model.hidden);
  c.model.dropout = get("model.dropout", c.model.dropout);
  c.model.heads = get("model.heads", c.model.heads);
  c.model.leaky_slope = get("model.leaky_slope", c.model.leaky_slope);
  if (auto v = tree.get_optional<std::string>("train.task")) c.train.task = parse_task(*v);
  c.model.task = c.train.task;
  c.train.lr = get("train.lr", c.train.lr);
  c.train.batch_size = get("train.batch_size", c.train.batch_size);
  c.train.epochs = get("train.epochs", c.train.epochs);
  c.train.clip_max_norm = get("train.clip_max_norm", c.train.clip_max_norm);
  if (auto v = tree.get_optional<std::string>("train.sampler")) c.train.sampler = parse_sampler(*v);
  c.train.cv_folds = get("train.cv_folds", c.train.cv_folds);
  c.train.validation_fraction = get("train.validation_fraction", c.train.validation_fraction);
  c.train.plateau_scheduler = get("train.plateau_scheduler", c.train.plateau_scheduler);
  c.exclude_features = split_list(get("features.exclude", std::string()));
  c.tune.trials = get("tune.trials", c.tune.trials);
  c.tune.hidden_min = get("tune.hidden_min", c.tune.hidden_min);
  c.tune.hidden_max = get("tune.hidden_max", c.tune.hidden_max);
  c.tune.dropout_min = get("tune.dropout_min", c.tune.dropout_min);
  c.tune.dropout_max = get("tune.dropout_max", c.tune.dropout_max);
  c.tune.batch_min = get("tune.batch_min", c.tune.batch_min);
  c.tune.batch_max = get("tune.batch_max", c.tune.batch_max);
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {{"command", command},
          {"datasets", datasets},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"exclude_features", exclude_features},
          {"output", output},
          {"seeds", seeds},
          {"blind_fraction", blind_fraction},
          {"tune",
           {{"trials", tune.trials},
            {"hidden", {tune.hidden_min, tune.hidden_max}},
            {"dropout", {tune.dropout_min, tune.dropout_max}},
            {"batch_size", {tune.batch_min, tune.batch_max}}}}};
}

}  // namespace molmp::cli
