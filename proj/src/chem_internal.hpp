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

#include "molmp/chemio.hpp"

namespace molmp::detail {

/// Fill smallest_ring_size and demote aromatic bonds outside rings to
/// single. First half of perceive(), needed by the parsers before
/// hydrogen assignment.
void resolve_ring_bonds(Molecule& m);

/// Bond order sum with aromatic bonds counted as 1.
int explicit_valence(const Molecule& m, const Adjacency& adj, int atom);

/// Hydrogen count an unbracketed SMILES atom gets in its current bonding
/// context; nullopt on valence overflow or non-organic elements.
std::optional<int> unbracketed_h(const Molecule& m, const Adjacency& adj, int atom);

}  // namespace molmp::detail
