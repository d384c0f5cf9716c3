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

#include <cmath>
#include <random>

#include "molmp/chemio.hpp"
#include "molmp/error.hpp"

namespace molmp {
namespace {

// Keeps atoms flagged in `keep`, renumbering atoms, bonds and stereo
// neighbor lists. `as_hydrogen[i]` marks removed atoms that became an
// implicit hydrogen of their neighbor.
Molecule subset(const Molecule& m, const std::vector<bool>& keep,
                const std::vector<bool>& as_hydrogen) {
  std::vector<int> remap(m.atoms.size(), -1);
  Molecule out;
  out.name = m.name;
  out.source_smiles = m.source_smiles;
  out.has_3d = m.has_3d;
  out.properties = m.properties;
  for (int i = 0; i < m.atom_count(); ++i) {
    if (!keep[i]) continue;
    remap[i] = out.atom_count();
    out.atoms.push_back(m.atoms[i]);
  }
  for (auto& atom : out.atoms) {
    if (atom.stereo_neighbors.empty()) continue;
    std::vector<int> mapped;
    bool ok = true;
    for (int v : atom.stereo_neighbors) {
      if (v < 0) {
        mapped.push_back(-1);
      } else if (remap[v] >= 0) {
        mapped.push_back(remap[v]);
      } else if (as_hydrogen[v]) {
        mapped.push_back(-1);
      } else {
        ok = false;
      }
    }
    if (!ok || std::count(mapped.begin(), mapped.end(), -1) > 1) {
      atom.chirality = Chirality::None;
      mapped.clear();
    }
    atom.stereo_neighbors = std::move(mapped);
  }
  for (const auto& bond : m.bonds) {
    if (remap[bond.a] < 0 || remap[bond.b] < 0) continue;
    Bond b = bond;
    b.a = remap[bond.a];
    b.b = remap[bond.b];
    out.bonds.push_back(b);
  }
  return out;
}

bool neutral_plain_hydrogen(const Atom& a) {
  return a.element == 1 && a.formal_charge == 0 && a.isotope == 0;
}

// N(=O)=O -> [N+](=O)[O-]; N=N#N -> N=[N+]=[N-].
void normalize_charges(Molecule& m) {
  const Adjacency adj(m);
  for (int i = 0; i < m.atom_count(); ++i) {
    auto& n = m.atoms[i];
    if (n.element != 7 || n.formal_charge != 0) continue;
    int valence = n.implicit_h;
    for (auto [v, bond] : adj[i]) {
      switch (m.bonds[bond].order) {
        case BondOrder::Double: valence += 2; break;
        case BondOrder::Triple: valence += 3; break;
        default: valence += 1; break;
      }
    }
    if (valence != 5) continue;
    bool fixed = false;
    for (auto [v, bond] : adj[i]) {
      auto& other = m.atoms[v];
      if (other.element == 8 && other.formal_charge == 0 &&
          m.bonds[bond].order == BondOrder::Double) {
        m.bonds[bond].order = BondOrder::Single;
        other.formal_charge = -1;
        n.formal_charge = 1;
        fixed = true;
        break;
      }
    }
    if (fixed) continue;
    for (auto [v, bond] : adj[i]) {
      auto& other = m.atoms[v];
      if (other.element == 7 && other.formal_charge == 0 &&
          m.bonds[bond].order == BondOrder::Triple && adj.degree(v) == 1) {
        m.bonds[bond].order = BondOrder::Double;
        other.formal_charge = -1;
        n.formal_charge = 1;
        break;
      }
    }
  }
}

}  // namespace

Molecule standardize(const Molecule& m) {
  const Adjacency adj(m);
  const int n = m.atom_count();

  // Fold explicit hydrogens that hang off a heavy atom.
  Molecule work = m;
  std::vector<bool> keep(n, true);
  std::vector<bool> as_hydrogen(n, false);
  for (int i = 0; i < n; ++i) {
    if (!neutral_plain_hydrogen(m.atoms[i]) || adj.degree(i) != 1) continue;
    const int heavy = adj[i].front().first;
    if (m.atoms[heavy].element == 1) continue;
    keep[i] = false;
    as_hydrogen[i] = true;
    work.atoms[heavy].implicit_h += 1 + m.atoms[i].implicit_h;
  }

  // Largest fragment by heavy-atom count; ties keep the first.
  std::vector<int> component(n, -1);
  std::vector<int> heavy_count;
  for (int s = 0; s < n; ++s) {
    if (!keep[s] || component[s] >= 0) continue;
    const int id = static_cast<int>(heavy_count.size());
    heavy_count.push_back(0);
    std::vector<int> stack{s};
    component[s] = id;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      heavy_count[id] += m.atoms[u].element != 1;
      for (auto [v, bond] : adj[u]) {
        if (keep[v] && component[v] < 0) {
          component[v] = id;
          stack.push_back(v);
        }
      }
    }
  }
  int best = -1;
  for (int c = 0; c < static_cast<int>(heavy_count.size()); ++c) {
    if (heavy_count[c] > 0 && (best < 0 || heavy_count[c] > heavy_count[best])) best = c;
  }
  if (best < 0) throw InputError("empty molecule after fragment stripping");
  for (int i = 0; i < n; ++i) {
    if (keep[i] && component[i] != best) keep[i] = false;
  }

  Molecule out = subset(work, keep, as_hydrogen);
  normalize_charges(out);
  // Reionization is intentionally a no-op: acid/base strength ordering is
  // toolkit-specific and the feature set carries no charge descriptors.
  perceive(out);
  return out;
}

Molecule perturb_coordinates(const Molecule& m, double sigma, std::uint64_t seed) {
  if (!m.has_3d) throw InputError("perturb_coordinates requires 3D coordinates");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be finite and >= 0");
  Molecule out = m;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& atom : out.atoms) {
    if (!atom.position) throw InputError("atom without coordinates in a 3D molecule");
    for (auto& c : *atom.position) c += noise(rng);
  }
  return out;
}

}  // namespace molmp
