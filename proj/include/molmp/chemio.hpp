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
#include <utility>
#include <vector>

namespace molmp {

using Vec3 = std::array<double, 3>;

enum class Hybridization { SP, SP2, SP3, Other };
enum class BondOrder { Single, Double, Triple, Aromatic };
/// Tetrahedral tag as written: `@` is anticlockwise, `@@` clockwise.
enum class Chirality { None, Anticlockwise, Clockwise };
/// Directional single bond marks (`/` and `\`); recorded, not interpreted.
enum class BondDirection { None, Up, Down };

struct Atom {
  int element = 6;
  int formal_charge = 0;
  bool aromatic = false;
  int implicit_h = 0;
  Hybridization hybridization = Hybridization::SP3;
  std::optional<Vec3> position;
  int isotope = 0;
  Chirality chirality = Chirality::None;
  /// Neighbor order that `chirality` refers to; -1 stands for the implicit
  /// hydrogen. Empty when no tag was given.
  std::vector<int> stereo_neighbors;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
  bool conjugated = false;
  /// 0 when acyclic, otherwise the size of the smallest cycle through it.
  int smallest_ring_size = 0;
  BondDirection direction = BondDirection::None;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string name;
  std::string source_smiles;
  bool has_3d = false;
  /// SDF data items (`> <key>` blocks), in file order.
  std::vector<std::pair<std::string, std::string>> properties;

  int atom_count() const noexcept { return static_cast<int>(atoms.size()); }
  int bond_count() const noexcept { return static_cast<int>(bonds.size()); }
  int heavy_atom_count() const noexcept;
  /// Index of the bond joining a and b, or -1.
  int find_bond(int a, int b) const noexcept;
};

/// Per-atom incident (neighbor, bond index) lists.
class Adjacency {
 public:
  explicit Adjacency(const Molecule& m);
  const std::vector<std::pair<int, int>>& operator[](int atom) const { return adj_[atom]; }
  int degree(int atom) const { return static_cast<int>(adj_[atom].size()); }
  std::size_t size() const noexcept { return adj_.size(); }

 private:
  std::vector<std::vector<std::pair<int, int>>> adj_;
};

/// Parse one SMILES string. Throws ParseError carrying the byte offset of
/// the offending token.
Molecule parse_smiles(std::string_view text);

/// Parse an MDL V2000 SD file (one or more `$$$$`-separated records).
/// ParseError offsets are 1-based line numbers.
std::vector<Molecule> parse_sdf(std::string_view bytes);

/// Remove explicit hydrogens, keep the largest fragment, normalize nitro
/// and azide groups to their charge-separated forms. Idempotent.
Molecule standardize(const Molecule& m);

/// A SMILES for the same graph, written by a seeded depth-first traversal
/// with a random start atom and random branch order.
std::string randomized_smiles(const Molecule& m, std::uint64_t seed);

/// Writer used by randomized_smiles with start atom 0 and neighbors in
/// index order.
std::string to_smiles(const Molecule& m);

/// Independent Gaussian noise of standard deviation `sigma` (Angstrom) on
/// every coordinate component. Requires 3D coordinates.
Molecule perturb_coordinates(const Molecule& m, double sigma, std::uint64_t seed);

/// Recompute derived annotations: ring sizes, aromaticity of Kekule rings,
/// hybridization and conjugation. Called by the parsers and standardize.
void perceive(Molecule& m);

/// Smallest set of smallest rings, each ring as an ordered atom cycle.
std::vector<std::vector<int>> sssr(const Molecule& m);

/// Implicit hydrogen count an unbracketed atom would get with the given
/// explicit valence (aromatic bonds counted as 1). nullopt when the element
/// is outside the organic subset or the valence overflows every allowed
/// state.
std::optional<int> default_implicit_h(int element, bool aromatic, int explicit_valence,
                                      int formal_charge = 0);

/// True when the two molecules are the same labelled graph up to atom
/// renumbering (element, charge, aromaticity, H count and bond orders).
bool isomorphic(const Molecule& a, const Molecule& b);

const char* to_string(Hybridization h) noexcept;
const char* to_string(BondOrder o) noexcept;

}  // namespace molmp
