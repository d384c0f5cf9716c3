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

// Graph perception shared by the parsers: ring sizes, SSSR, aromaticity of
// Kekule rings, hybridization, conjugation and isomorphism.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <numeric>

#include "chem_internal.hpp"
#include "molmp/chemio.hpp"
#include "molmp/error.hpp"

namespace molmp {

int Molecule::heavy_atom_count() const noexcept {
  return static_cast<int>(std::count_if(atoms.begin(), atoms.end(),
                                        [](const Atom& a) { return a.element != 1; }));
}

int Molecule::find_bond(int a, int b) const noexcept {
  for (int i = 0; i < bond_count(); ++i) {
    const auto& bd = bonds[i];
    if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) return i;
  }
  return -1;
}

Adjacency::Adjacency(const Molecule& m) : adj_(m.atoms.size()) {
  for (int i = 0; i < m.bond_count(); ++i) {
    adj_[m.bonds[i].a].emplace_back(m.bonds[i].b, i);
    adj_[m.bonds[i].b].emplace_back(m.bonds[i].a, i);
  }
}

const char* to_string(Hybridization h) noexcept {
  switch (h) {
    case Hybridization::SP: return "SP";
    case Hybridization::SP2: return "SP2";
    case Hybridization::SP3: return "SP3";
    case Hybridization::Other: return "OTHER";
  }
  return "?";
}

const char* to_string(BondOrder o) noexcept {
  switch (o) {
    case BondOrder::Single: return "SINGLE";
    case BondOrder::Double: return "DOUBLE";
    case BondOrder::Triple: return "TRIPLE";
    case BondOrder::Aromatic: return "AROMATIC";
  }
  return "?";
}

namespace {

// BFS path a -> b that does not use bond `skip`; returns atoms a..b or empty.
std::vector<int> shortest_path_avoiding(const Adjacency& adj, int a, int b, int skip) {
  std::vector<int> parent(adj.size(), -2);
  std::deque<int> queue{a};
  parent[a] = -1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (u == b) break;
    for (auto [v, bond] : adj[u]) {
      if (bond == skip || parent[v] != -2) continue;
      parent[v] = u;
      queue.push_back(v);
    }
  }
  if (parent[b] == -2) return {};
  std::vector<int> path;
  for (int v = b; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

using EdgeSet = std::vector<std::uint64_t>;

EdgeSet cycle_edges(const Molecule& m, const std::vector<int>& cycle) {
  EdgeSet bits((m.bonds.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const int bond = m.find_bond(cycle[i], cycle[(i + 1) % cycle.size()]);
    bits[bond / 64] |= std::uint64_t{1} << (bond % 64);
  }
  return bits;
}

int connected_components(const Adjacency& adj) {
  std::vector<bool> seen(adj.size(), false);
  int count = 0;
  for (std::size_t s = 0; s < adj.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<int> stack{static_cast<int>(s)};
    seen[s] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (auto [v, bond] : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
  }
  return count;
}

void assign_ring_sizes(Molecule& m, const Adjacency& adj) {
  for (int i = 0; i < m.bond_count(); ++i) {
    const auto path = shortest_path_avoiding(adj, m.bonds[i].a, m.bonds[i].b, i);
    m.bonds[i].smallest_ring_size = path.empty() ? 0 : static_cast<int>(path.size());
  }
}

bool is_lone_pair_donor(int z) { return z == 7 || z == 8 || z == 15 || z == 16 || z == 34; }

// Marks 5- and 6-membered Kekule rings with 4n+2 pi electrons as aromatic.
void perceive_aromaticity(Molecule& m, const Adjacency& adj) {
  const auto rings = sssr(m);
  std::vector<BondOrder> kekule(m.bonds.size());
  for (int i = 0; i < m.bond_count(); ++i) kekule[i] = m.bonds[i].order;

  bool changed = true;
  std::vector<bool> done(rings.size(), false);
  while (changed) {
    changed = false;
    for (std::size_t r = 0; r < rings.size(); ++r) {
      const auto& ring = rings[r];
      if (done[r] || (ring.size() != 5 && ring.size() != 6)) continue;
      const bool all_aromatic = std::all_of(ring.begin(), ring.end(),
                                            [&](int a) { return m.atoms[a].aromatic; });
      if (all_aromatic) {
        done[r] = true;
        continue;
      }
      auto in_ring = [&](int a) { return std::find(ring.begin(), ring.end(), a) != ring.end(); };
      int electrons = 0;
      bool ok = true;
      for (int a : ring) {
        const auto& atom = m.atoms[a];
        if (atom.aromatic) {
          // Already aromatic through a fused ring: contributes one electron
          // unless it is a lone-pair heteroatom without multiple bonds.
          bool has_multiple = false;
          for (auto [v, bond] : adj[a]) {
            has_multiple |= kekule[bond] != BondOrder::Single;
          }
          electrons += (!has_multiple && is_lone_pair_donor(atom.element)) ? 2 : 1;
          continue;
        }
        int contribution = -1;
        for (auto [v, bond] : adj[a]) {
          if (kekule[bond] == BondOrder::Triple) {
            ok = false;
            break;
          }
          if (kekule[bond] == BondOrder::Double || kekule[bond] == BondOrder::Aromatic) {
            if (in_ring(v)) {
              contribution = 1;
            } else if (m.atoms[v].element == 6 && !m.atoms[v].aromatic) {
              ok = false;
            } else if (m.atoms[v].element == 6) {
              contribution = std::max(contribution, 1);
            } else {
              contribution = std::max(contribution, 0);
            }
          }
        }
        if (!ok) break;
        if (contribution < 0) {
          if (is_lone_pair_donor(atom.element) && atom.formal_charge <= 0) {
            contribution = 2;
          } else if (atom.element == 6 && atom.formal_charge == -1) {
            contribution = 2;
          } else if (atom.element == 6 && atom.formal_charge == 1) {
            contribution = 0;
          } else {
            ok = false;
            break;
          }
        }
        electrons += contribution;
      }
      if (!ok || electrons % 4 != 2) continue;
      for (std::size_t i = 0; i < ring.size(); ++i) {
        m.atoms[ring[i]].aromatic = true;
        const int bond = m.find_bond(ring[i], ring[(i + 1) % ring.size()]);
        m.bonds[bond].order = BondOrder::Aromatic;
      }
      done[r] = true;
      changed = true;
    }
  }
}

bool is_metal(int z) {
  switch (z) {
    case 1: case 5: case 6: case 7: case 8: case 9: case 14: case 15: case 16: case 17:
    case 33: case 34: case 35: case 52: case 53: case 2: case 10: case 18: case 36:
    case 54: case 86:
      return false;
    default:
      return true;
  }
}

void assign_hybridization(Molecule& m, const Adjacency& adj) {
  for (int i = 0; i < m.atom_count(); ++i) {
    auto& atom = m.atoms[i];
    int doubles = 0;
    int triples = 0;
    for (auto [v, bond] : adj[i]) {
      doubles += m.bonds[bond].order == BondOrder::Double;
      triples += m.bonds[bond].order == BondOrder::Triple;
    }
    if (triples > 0 || doubles >= 2) {
      atom.hybridization = Hybridization::SP;
    } else if (atom.aromatic || doubles == 1) {
      atom.hybridization = Hybridization::SP2;
    } else if (is_metal(atom.element)) {
      atom.hybridization = Hybridization::Other;
    } else {
      atom.hybridization = Hybridization::SP3;
    }
  }
}

void assign_conjugation(Molecule& m, const Adjacency& adj) {
  auto multiple = [&](int bond) { return m.bonds[bond].order != BondOrder::Single; };
  // Atom carries a multiple bond other than `except`.
  auto has_multiple = [&](int atom, int except) {
    for (auto [v, bond] : adj[atom]) {
      if (bond != except && multiple(bond)) return true;
    }
    return false;
  };
  auto lone_pair = [&](int atom) {
    return is_lone_pair_donor(m.atoms[atom].element) && !has_multiple(atom, -1);
  };
  for (int i = 0; i < m.bond_count(); ++i) {
    auto& bond = m.bonds[i];
    if (bond.order == BondOrder::Aromatic) {
      bond.conjugated = true;
    } else if (multiple(i)) {
      bool conj = false;
      for (int end : {bond.a, bond.b}) {
        for (auto [v, other] : adj[end]) {
          if (other == i) continue;
          conj |= multiple(other) || lone_pair(v);
        }
      }
      bond.conjugated = conj;
    } else {
      const bool a_ok = has_multiple(bond.a, i) || lone_pair(bond.a);
      const bool b_ok = has_multiple(bond.b, i) || lone_pair(bond.b);
      bond.conjugated = a_ok && b_ok && (has_multiple(bond.a, i) || has_multiple(bond.b, i));
    }
  }
}

}  // namespace

std::vector<std::vector<int>> sssr(const Molecule& m) {
  const Adjacency adj(m);
  const int n_rings = m.bond_count() - m.atom_count() + connected_components(adj);
  if (n_rings <= 0) return {};

  // Horton-style candidates: for every root and every non-tree edge of its
  // BFS tree, the cycle root -> x, y -> root when the two paths only meet
  // at the root.
  std::vector<std::vector<int>> candidates;
  for (int root = 0; root < m.atom_count(); ++root) {
    std::vector<int> parent(m.atoms.size(), -2);
    std::vector<int> depth(m.atoms.size(), 0);
    std::vector<int> parent_bond(m.atoms.size(), -1);
    std::deque<int> queue{root};
    parent[root] = -1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (auto [v, bond] : adj[u]) {
        if (parent[v] != -2) continue;
        parent[v] = u;
        parent_bond[v] = bond;
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
    }
    for (int b = 0; b < m.bond_count(); ++b) {
      const int x = m.bonds[b].a;
      const int y = m.bonds[b].b;
      if (parent[x] == -2 || parent[y] == -2) continue;
      if (parent_bond[x] == b || parent_bond[y] == b) continue;
      std::vector<int> px;
      std::vector<int> py;
      for (int v = x; v != -1; v = parent[v]) px.push_back(v);
      for (int v = y; v != -1; v = parent[v]) py.push_back(v);
      std::vector<int> sorted_x(px.begin(), px.end() - 1);
      std::vector<int> sorted_y(py.begin(), py.end() - 1);
      std::sort(sorted_x.begin(), sorted_x.end());
      std::sort(sorted_y.begin(), sorted_y.end());
      std::vector<int> common;
      std::set_intersection(sorted_x.begin(), sorted_x.end(), sorted_y.begin(), sorted_y.end(),
                            std::back_inserter(common));
      if (!common.empty()) continue;
      std::vector<int> cycle(px.rbegin(), px.rend());  // root .. x
      cycle.insert(cycle.end(), py.begin(), py.end() - 1);  // y .. child of root
      candidates.push_back(std::move(cycle));
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });

  // Greedy selection of linearly independent cycles over GF(2).
  std::vector<std::vector<int>> basis;
  std::vector<EdgeSet> reduced;  // row-echelon rows
  std::vector<int> pivots;
  for (const auto& cycle : candidates) {
    EdgeSet row = cycle_edges(m, cycle);
    for (std::size_t r = 0; r < reduced.size(); ++r) {
      const int p = pivots[r];
      if (row[p / 64] >> (p % 64) & 1U) {
        for (std::size_t w = 0; w < row.size(); ++w) row[w] ^= reduced[r][w];
      }
    }
    int pivot = -1;
    for (std::size_t w = 0; w < row.size() && pivot < 0; ++w) {
      if (row[w] != 0) pivot = static_cast<int>(w * 64) + __builtin_ctzll(row[w]);
    }
    if (pivot < 0) continue;
    reduced.push_back(std::move(row));
    pivots.push_back(pivot);
    basis.push_back(cycle);
    if (static_cast<int>(basis.size()) == n_rings) break;
  }
  return basis;
}

namespace detail {

void resolve_ring_bonds(Molecule& m) {
  const Adjacency adj(m);
  assign_ring_sizes(m, adj);
  for (auto& bond : m.bonds) {
    if (bond.order == BondOrder::Aromatic && bond.smallest_ring_size == 0) {
      bond.order = BondOrder::Single;
    }
  }
}

int explicit_valence(const Molecule& m, const Adjacency& adj, int atom) {
  int valence = 0;
  for (auto [v, bond] : adj[atom]) {
    switch (m.bonds[bond].order) {
      case BondOrder::Single: case BondOrder::Aromatic: valence += 1; break;
      case BondOrder::Double: valence += 2; break;
      case BondOrder::Triple: valence += 3; break;
    }
  }
  return valence;
}

std::optional<int> unbracketed_h(const Molecule& m, const Adjacency& adj, int atom) {
  bool has_double = false;
  for (auto [v, bond] : adj[atom]) has_double |= m.bonds[bond].order == BondOrder::Double;
  const auto& a = m.atoms[atom];
  return default_implicit_h(a.element, a.aromatic && !has_double,
                            explicit_valence(m, adj, atom), a.formal_charge);
}

}  // namespace detail

void perceive(Molecule& m) {
  detail::resolve_ring_bonds(m);
  const Adjacency adj(m);
  perceive_aromaticity(m, adj);
  assign_hybridization(m, adj);
  assign_conjugation(m, adj);
}

std::optional<int> default_implicit_h(int element, bool aromatic, int explicit_valence,
                                      int formal_charge) {
  std::vector<int> allowed;
  switch (element) {
    case 5: allowed = {3 - formal_charge}; break;
    case 6: allowed = {4 - std::abs(formal_charge)}; break;
    case 7: case 15: allowed = {3 + formal_charge, 5 + formal_charge}; break;
    case 8: allowed = {2 + formal_charge}; break;
    case 16: case 34: allowed = {2 + formal_charge, 4 + formal_charge, 6 + formal_charge}; break;
    case 9: case 17: case 35: case 53: allowed = {1 + formal_charge}; break;
    default: return std::nullopt;
  }
  const bool donates_pair = element == 8 || element == 16 || element == 34;
  if (aromatic && !donates_pair) {
    // One valence unit goes to the pi system; a saturated aromatic atom
    // (pyrrole-type N with three neighbors) contributes a lone pair instead.
    const int lowest = allowed.front();
    if (explicit_valence + 1 <= lowest) return lowest - explicit_valence - 1;
    if (explicit_valence <= lowest) return lowest - explicit_valence;
  }
  for (int target : allowed) {
    if (target >= explicit_valence) return target - explicit_valence;
  }
  return std::nullopt;
}

namespace {

std::vector<std::uint64_t> refine_colors(const Molecule& m, const Adjacency& adj) {
  std::vector<std::uint64_t> color(m.atoms.size());
  for (int i = 0; i < m.atom_count(); ++i) {
    const auto& a = m.atoms[i];
    color[i] = (static_cast<std::uint64_t>(a.element) << 40) ^
               (static_cast<std::uint64_t>(a.formal_charge + 8) << 32) ^
               (static_cast<std::uint64_t>(a.aromatic) << 31) ^
               (static_cast<std::uint64_t>(a.implicit_h) << 24) ^
               static_cast<std::uint64_t>(adj.degree(i));
  }
  for (std::size_t iter = 0; iter < m.atoms.size(); ++iter) {
    std::vector<std::uint64_t> next(color.size());
    for (int i = 0; i < m.atom_count(); ++i) {
      std::vector<std::uint64_t> nb;
      for (auto [v, bond] : adj[i]) {
        nb.push_back(color[v] * 31 + static_cast<std::uint64_t>(m.bonds[bond].order));
      }
      std::sort(nb.begin(), nb.end());
      std::uint64_t h = color[i] * 0x9E3779B97F4A7C15ULL;
      for (auto c : nb) h = (h ^ c) * 0x100000001B3ULL + 0x7F4A7C15ULL;
      next[i] = h;
    }
    if (next == color) break;
    color.swap(next);
  }
  return color;
}

}  // namespace

bool isomorphic(const Molecule& a, const Molecule& b) {
  if (a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count()) return false;
  const Adjacency adj_a(a);
  const Adjacency adj_b(b);
  const auto ca = refine_colors(a, adj_a);
  const auto cb = refine_colors(b, adj_b);
  auto sa = ca;
  auto sb = cb;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) return false;

  // BFS order over a so each new atom (except fragment roots) has a mapped
  // neighbor, which keeps the backtracking shallow.
  std::vector<int> order;
  std::vector<bool> seen(a.atoms.size(), false);
  for (int s = 0; s < a.atom_count(); ++s) {
    if (seen[s]) continue;
    std::deque<int> q{s};
    seen[s] = true;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      order.push_back(u);
      for (auto [v, bond] : adj_a[u]) {
        if (!seen[v]) {
          seen[v] = true;
          q.push_back(v);
        }
      }
    }
  }
  std::vector<int> map_ab(a.atoms.size(), -1);
  std::vector<int> map_ba(b.atoms.size(), -1);
  std::function<bool(std::size_t)> extend = [&](std::size_t k) -> bool {
    if (k == order.size()) return true;
    const int u = order[k];
    for (int v = 0; v < b.atom_count(); ++v) {
      if (map_ba[v] != -1 || cb[v] != ca[u]) continue;
      bool consistent = true;
      for (auto [un, bond] : adj_a[u]) {
        const int vn = map_ab[un];
        if (vn < 0) continue;
        const int bb = b.find_bond(v, vn);
        if (bb < 0 || b.bonds[bb].order != a.bonds[bond].order) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;
      map_ab[u] = v;
      map_ba[v] = u;
      if (extend(k + 1)) return true;
      map_ab[u] = -1;
      map_ba[v] = -1;
    }
    return false;
  };
  return extend(0);
}

}  // namespace molmp
