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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molmp/chemio.hpp"
#include "molmp/matrix.hpp"

namespace molmp {

enum class FeatureGroup { Atom, Bond, Global };

struct FeatureSpec {
  std::string name;
  FeatureGroup group = FeatureGroup::Atom;
};

/// Ordered feature names. Features are stored grouped: all atom features,
/// then bond features, then global features.
class FeatureManifest {
 public:
  explicit FeatureManifest(std::vector<FeatureSpec> features);

  /// The sixteen built-in molecular features.
  static const FeatureManifest& standard();

  int size() const noexcept { return static_cast<int>(features_.size()); }
  const FeatureSpec& operator[](int i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  int count(FeatureGroup g) const noexcept;
  /// Position of a feature within its own group.
  int group_offset(int i) const;
  int index_of(std::string_view name) const noexcept;
  /// Stable 64-bit FNV-1a digest of names and groups, hex encoded.
  std::string hash() const;
  std::string to_json() const;
  static FeatureManifest from_json(std::string_view text);

 private:
  std::vector<FeatureSpec> features_;
};

/// One flag per manifest feature; true keeps the feature.
using FeatureMask = std::vector<bool>;

FeatureMask full_mask(const FeatureManifest& manifest);
/// Full mask minus the named features; throws InputError on unknown names.
FeatureMask mask_without(const FeatureManifest& manifest, const std::vector<std::string>& names);
std::vector<std::string> active_names(const FeatureManifest& manifest, const FeatureMask& mask);

struct FeaturizedGraph {
  int n_atoms = 0;
  Matrix x;                                   // n_atoms x active atom features
  std::vector<std::array<int, 2>> edge_index; // one entry per bond, source < destination
  Matrix edge_attr;                           // bonds x active bond features
  std::vector<double> u;                      // active global features
  std::optional<double> y;
  FeatureMask feature_mask;
  std::string name;
  std::string smiles;
};

struct FeaturizeOptions {
  /// When false, 3D coordinates are ignored and the 2D fallbacks are used.
  bool use_3d = true;
  double probe_radius = 3.5;  // Angstrom
  double grid_spacing = 0.5;  // Angstrom
};

/// [Z, hybridization, electronegativity, polarizability, vdW radius,
/// buried volume], each scaled to its normalized range.
std::vector<double> atom_features(const Molecule& m, int atom, const FeaturizeOptions& opt = {});

/// Fraction of grid nodes inside the probe sphere around `atom` that fall
/// within the vdW radius of any atom. Without 3D coordinates returns
/// heavy degree / 4.
double buried_volume(const Molecule& m, int atom, double radius = 3.5, double spacing = 0.5);

/// [length - 1, conjugated, bond type, ring size].
std::vector<double> bond_features(const Molecule& m, int bond, const FeaturizeOptions& opt = {});

/// [chiral centers, hydrogen balance, rotatable bonds, solubility,
/// sp3 carbon fraction, radius of gyration].
std::vector<double> global_features(const Molecule& m, const FeaturizeOptions& opt = {});

FeaturizedGraph featurize(const Molecule& m, const FeatureMask& mask,
                          std::optional<double> label = std::nullopt,
                          const FeaturizeOptions& opt = {});

/// Drop the columns of features active in `g` but not in `mask`.
/// `mask` must be a subset of g.feature_mask.
FeaturizedGraph apply_mask(const FeaturizedGraph& g, const FeatureManifest& manifest,
                           const FeatureMask& mask);

/// Throws InvariantError when a value is not finite or a shape disagrees
/// with the mask.
void check_graph(const FeaturizedGraph& g, const FeatureManifest& manifest);

// Descriptors feeding the global block.

struct Descriptors {
  int chiral_centers = 0;
  int hbd = 0;
  int hba = 0;
  int rotatable_bonds = 0;
  double tpsa = 0.0;
  double logp = 0.0;
  double sp3_fraction = 0.0;
  double radius_of_gyration = 0.0;
};

Descriptors compute_descriptors(const Molecule& m, const FeaturizeOptions& opt = {});

/// Graph-invariant classes refined from atom invariants and neighbors.
std::vector<int> morgan_ranks(const Molecule& m);
int count_chiral_centers(const Molecule& m);
int count_rotatable_bonds(const Molecule& m);
int count_hbd(const Molecule& m);
int count_hba(const Molecule& m);
/// Ertl fragment contributions for N and O (Angstrom^2).
double tpsa(const Molecule& m);
/// Crippen-style atom contributions from a reduced type table.
double crippen_logp(const Molecule& m);
/// Mass-weighted RMS distance from the centre of mass.
double radius_of_gyration(const Molecule& m, const std::vector<Vec3>& coords);

/// Deterministic planar embedding (z = 0) by stress majorization with
/// covalent-radius bond lengths.
std::vector<Vec3> layout_2d(const Molecule& m);

/// Atom positions: the stored 3D coordinates when present and requested,
/// otherwise the 2D layout.
std::vector<Vec3> coordinates(const Molecule& m, bool use_3d = true);

}  // namespace molmp
