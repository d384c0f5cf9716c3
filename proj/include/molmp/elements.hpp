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

#include <optional>
#include <string_view>

namespace molmp::elements {

/// Tabulated per-element constants consumed by featurization.
struct ElementRecord {
  int z = 0;
  std::string_view symbol;
  double electronegativity = 0.0;      // Pauling scale
  double dipole_polarizability = 0.0;  // Bohr^3 (atomic units)
  double vdw_radius = 0.0;             // pm
  double covalent_radius = 0.0;        // Angstrom
  double atomic_mass = 0.0;            // u
};

/// Record for atomic number `z`; throws InputError when the element has no
/// tabulated properties.
const ElementRecord& lookup(int z);

/// Non-throwing variant.
const ElementRecord* find(int z) noexcept;

/// Symbol for any Z in 1..118 ("" otherwise). Covers the whole periodic
/// table so the parsers accept elements that cannot be featurized.
std::string_view symbol(int z) noexcept;

/// Atomic number for a capitalized element symbol, or nullopt.
std::optional<int> atomic_number(std::string_view symbol) noexcept;

inline constexpr int kMaxAtomicNumber = 118;

}  // namespace molmp::elements
