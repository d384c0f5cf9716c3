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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "molmp/chemio.hpp"
#include "molmp/featurizer.hpp"

namespace molmp::cli {

enum class SourceFormat { Smiles, Sdf };

/// One molecule read from a dataset file. `source` is the text it was
/// parsed from (a SMILES or one SDF record) so it can be re-parsed later.
struct InputMolecule {
  int row = 0;  // 1-based line (CSV) or record number (SDF)
  std::string name;
  std::string source;
  Molecule molecule;
  std::optional<double> label;
};

struct LoadOptions {
  std::string label_column = "label";
  /// When set, the label column holds IC50 values in nM and is converted
  /// to 1 for IC50 <= threshold.
  std::optional<double> ic50_threshold;
  bool standardize = true;
};

struct LoadResult {
  SourceFormat format = SourceFormat::Smiles;
  std::vector<InputMolecule> molecules;
  int skipped = 0;
};

/// Reads a `name,smiles,label` CSV or an SD file (chosen by extension).
/// Rows that fail to parse are skipped and logged with their row number.
/// Throws InputError when the file cannot be read or lacks a SMILES column.
LoadResult load_molecules(const std::filesystem::path& path, const LoadOptions& opt = {});

/// Parse a stored source string back into a molecule, standardized when
/// requested, as at load time.
Molecule reparse(const std::string& source, SourceFormat format, bool standardize);

/// Minimal RFC 4180 record splitter: commas, double-quoted fields with
/// doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

/// Featurization arm: "2d", "3d" or "noisy3d:<sigma>".
struct FeaturizeMode {
  enum Kind { Flat, Clean3d, Noisy3d } kind = Flat;
  double sigma = 0.0;

  static FeaturizeMode parse(const std::string& text);
  std::string to_string() const;
};

struct GraphCache {
  FeatureManifest manifest = FeatureManifest::standard();
  FeatureMask mask;
  std::string mode = "2d";
  SourceFormat format = SourceFormat::Smiles;
  bool standardized = true;
  std::vector<FeaturizedGraph> graphs;
  std::vector<std::string> sources;  // parallel to graphs
};

inline constexpr std::string_view kCacheMagic = "MOLMPGC1";

/// Binary cache: magic, u64 header length, JSON header (manifest, mask,
/// mode, count), then per graph length-prefixed strings and float64 arrays
/// in native little-endian order.
void write_cache(const std::filesystem::path& path, const GraphCache& cache);
GraphCache read_cache(const std::filesystem::path& path);

struct FeaturizeReport {
  GraphCache cache;
  int skipped = 0;
};

/// Featurize loaded molecules in the given mode. Molecules without
/// coordinates are skipped (and logged) in the 3D modes. Noise seeds are
/// derived per molecule from `seed`, so results do not depend on `workers`.
FeaturizeReport featurize_all(const LoadResult& input, const LoadOptions& load, const FeatureMask& mask,
                              const FeaturizeMode& mode, std::uint64_t seed, int workers);

/// Git blob object id (SHA-1 of "blob <size>\0" + content), hex encoded.
std::string git_blob_hash(const std::string& content);
std::string git_blob_hash_file(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Run fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace molmp::cli
