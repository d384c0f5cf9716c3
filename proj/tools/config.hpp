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
#include <string>
#include <vector>

#include "json.hpp"
#include "molmp/mpnn.hpp"
#include "molmp/selectune.hpp"
#include "molmp/trainpipe.hpp"

namespace molmp::cli {

/// Everything a run needs, loadable from an INI file with [run], [model],
/// [train], [features] and [tune] sections. Command-line flags override
/// file values.
struct RunConfig {
  std::string command;
  std::vector<std::string> datasets;
  ModelSpec model;
  TrainConfig train;
  TuneConfig tune;
  std::vector<std::string> exclude_features;
  std::string output;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double blind_fraction = 0.2;
  int workers = 1;

  /// Throws InputError when a dataset path is missing, the seed list is
  /// empty or a model/training field is out of range.
  void validate() const;
  /// Round-trips through from_ini exactly, doubles included.
  std::string to_ini() const;
  static RunConfig from_ini(const std::string& text);
  nlohmann::json to_json() const;
};

/// Comma-separated list, whitespace trimmed, empty items dropped.
std::vector<std::string> split_list(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);
Sampler parse_sampler(const std::string& text);
std::string to_string(Sampler s);

}  // namespace molmp::cli
