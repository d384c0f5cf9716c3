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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "chem_internal.hpp"
#include "molmp/elements.hpp"
#include "molmp/featurizer.hpp"

namespace molmp {

namespace {

int heavy_degree(const Molecule& m, const Adjacency& adj, int i) {
  int d = 0;
  for (auto [j, b] : adj[i]) {
    (void)b;
    if (m.atoms[j].element != 1) ++d;
  }
  return d;
}

bool is_hetero(int z) { return z != 6 && z != 1; }

// Bond counts around one atom, split by order.
struct Environment {
  int single = 0;
  int dbl = 0;
  int triple = 0;
  int aromatic = 0;
  int neighbors() const { return single + dbl + triple + aromatic; }
};

Environment environment(const Molecule& m, const Adjacency& adj, int i) {
  Environment e;
  for (auto [j, b] : adj[i]) {
    (void)j;
    switch (m.bonds[b].order) {
      case BondOrder::Single: ++e.single; break;
      case BondOrder::Double: ++e.dbl; break;
      case BondOrder::Triple: ++e.triple; break;
      case BondOrder::Aromatic: ++e.aromatic; break;
    }
  }
  return e;
}

bool in_three_ring(const Molecule& m, const Adjacency& adj, int i) {
  for (auto [j, b] : adj[i]) {
    (void)j;
    if (m.bonds[b].smallest_ring_size == 3) return true;
  }
  return false;
}

double nitrogen_psa(const Atom& a, const Environment& e, bool ring3) {
  const int h = a.implicit_h;
  const int q = a.formal_charge;
  const int s = e.single, d = e.dbl, t = e.triple, ar = e.aromatic;
  if (q == 0) {
    if (ar == 0) {
      if (h == 0 && s == 3 && d == 0 && t == 0) return ring3 ? 3.01 : 3.24;
      if (h == 0 && s == 1 && d == 1 && t == 0) return 12.36;
      if (h == 0 && s == 0 && d == 0 && t == 1) return 23.79;
      if (h == 0 && s == 1 && d == 2 && t == 0) return 11.68;
      if (h == 0 && s == 0 && d == 1 && t == 1) return 13.60;
      if (h == 1 && s == 2 && d == 0 && t == 0) return ring3 ? 21.94 : 12.03;
      if (h == 1 && s == 0 && d == 1 && t == 0) return 23.85;
      if (h == 2 && s == 1 && d == 0 && t == 0) return 26.02;
    } else {
      if (h == 0 && ar == 2 && s == 0 && d == 0) return 12.89;
      if (h == 0 && ar == 3 && s == 0 && d == 0) return 4.41;
      if (h == 0 && ar == 2 && s == 1 && d == 0) return 4.93;
      if (h == 0 && ar == 2 && s == 0 && d == 1) return 8.39;
      if (h == 1 && ar == 2 && s == 0 && d == 0) return 15.79;
    }
  } else if (q == 1) {
    if (ar == 0) {
      if (h == 0 && s == 4) return 0.00;
      if (h == 0 && s == 2 && d == 1) return 3.01;
      if (h == 0 && s == 1 && t == 1) return 4.36;
      if (h == 1 && s == 3) return 4.44;
      if (h == 1 && s == 1 && d == 1) return 13.97;
      if (h == 2 && s == 2) return 16.61;
      if (h == 2 && d == 1) return 25.59;
      if (h == 3 && s == 1) return 27.64;
    } else {
      if (h == 0 && ar == 3) return 4.10;
      if (h == 0 && ar == 2 && s == 1) return 3.88;
      if (h == 1 && ar == 2 && s == 0) return 14.14;
    }
  }
  return std::max(0.0, 30.5 - 8.2 * e.neighbors() + 1.5 * h);
}

double oxygen_psa(const Atom& a, const Environment& e, bool ring3) {
  const int h = a.implicit_h;
  if (a.formal_charge == 0) {
    if (e.aromatic == 2 && h == 0) return 13.14;
    if (e.aromatic == 0 && h == 0 && e.single == 2) return ring3 ? 12.53 : 9.23;
    if (e.aromatic == 0 && h == 0 && e.dbl == 1 && e.neighbors() == 1) return 17.07;
    if (e.aromatic == 0 && h == 1 && e.single == 1 && e.neighbors() == 1) return 20.23;
  } else if (a.formal_charge == -1) {
    if (h == 0 && e.single == 1 && e.neighbors() == 1) return 23.06;
  }
  return std::max(0.0, 28.5 - 8.6 * e.neighbors() + 1.5 * h);
}

bool double_bond_to_hetero(const Molecule& m, const Adjacency& adj, int i) {
  for (auto [j, b] : adj[i]) {
    if (m.bonds[b].order == BondOrder::Double && is_hetero(m.atoms[j].element)) return true;
  }
  return false;
}

double carbon_logp(const Molecule& m, const Adjacency& adj, int i) {
  const Atom& a = m.atoms[i];
  const Environment e = environment(m, adj, i);
  int hetero = 0;
  bool aromatic_neighbor = false;
  for (auto [j, b] : adj[i]) {
    (void)b;
    if (is_hetero(m.atoms[j].element)) ++hetero;
    aromatic_neighbor |= m.atoms[j].aromatic;
  }
  if (a.aromatic) {
    if (hetero > 0) return 0.1360;
    if (a.implicit_h > 0) return 0.1581;
    return e.aromatic == 3 ? 0.2955 : 0.2713;
  }
  if (e.triple > 0) return 0.0017;
  if (e.dbl > 0) return double_bond_to_hetero(m, adj, i) ? -0.2783 : 0.1551;
  if (hetero > 0) return a.implicit_h >= 2 ? -0.2035 : -0.2051;
  if (aromatic_neighbor) return 0.08452;
  return a.implicit_h >= 2 || e.neighbors() <= 1 ? 0.1441 : 0.0;
}

double nitrogen_logp(const Atom& a, const Environment& e) {
  if (a.formal_charge > 0) return -1.0;
  if (a.aromatic) return -0.4806;
  if (e.triple > 0) return -0.3239;
  if (e.dbl > 0) return -0.4806;
  if (a.implicit_h >= 2) return -1.0190;
  if (a.implicit_h == 1) return -0.7096;
  return -0.3187;
}

double oxygen_logp(const Molecule& m, const Adjacency& adj, int i) {
  const Atom& a = m.atoms[i];
  if (a.aromatic) return 0.1552;
  if (a.formal_charge < 0) return -1.3260;
  const Environment e = environment(m, adj, i);
  if (e.dbl > 0) return -0.1526;
  if (a.implicit_h > 0) return -0.2893;
  for (auto [j, b] : adj[i]) {
    (void)b;
    if (m.atoms[j].aromatic) return -0.4195;
  }
  return -0.0684;
}

double hydrogen_logp(int host_element) {
  switch (host_element) {
    case 6: return 0.1230;
    case 7: return 0.2142;
    case 8: return -0.2677;
    default: return 0.1230;
  }
}

}  // namespace

std::vector<int> morgan_ranks(const Molecule& m) {
  const Adjacency adj(m);
  const int n = m.atom_count();
  using Key = std::vector<int>;
  auto rank_keys = [n](const std::vector<Key>& keys) {
    std::vector<Key> sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> ranks(n);
    for (int i = 0; i < n; ++i) {
      ranks[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
    }
    return std::pair{ranks, static_cast<int>(sorted.size())};
  };
  std::vector<Key> keys(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = m.atoms[i];
    keys[i] = {a.element, adj.degree(i), a.implicit_h, a.formal_charge, a.aromatic ? 1 : 0, a.isotope};
  }
  auto [ranks, classes] = rank_keys(keys);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      std::vector<int> around;
      for (auto [j, b] : adj[i]) around.push_back(ranks[j] * 4 + static_cast<int>(m.bonds[b].order));
      std::sort(around.begin(), around.end());
      keys[i] = {ranks[i]};
      keys[i].insert(keys[i].end(), around.begin(), around.end());
    }
    auto [next, next_classes] = rank_keys(keys);
    if (next_classes == classes) break;
    ranks = std::move(next);
    classes = next_classes;
  }
  return ranks;
}

int count_chiral_centers(const Molecule& m) {
  const Adjacency adj(m);
  const auto ranks = morgan_ranks(m);
  int count = 0;
  for (int i = 0; i < m.atom_count(); ++i) {
    const Atom& a = m.atoms[i];
    if (a.hybridization != Hybridization::SP3 || a.implicit_h > 1) continue;
    if (adj.degree(i) + a.implicit_h != 4) continue;
    std::vector<int> around;
    if (a.implicit_h == 1) around.push_back(-1);
    for (auto [j, b] : adj[i]) {
      (void)b;
      around.push_back(ranks[j]);
    }
    std::sort(around.begin(), around.end());
    if (std::adjacent_find(around.begin(), around.end()) == around.end()) ++count;
  }
  return count;
}

int count_rotatable_bonds(const Molecule& m) {
  const Adjacency adj(m);
  auto is_amide_carbon = [&](int c) {
    if (m.atoms[c].element != 6) return false;
    for (auto [j, b] : adj[c]) {
      if (m.atoms[j].element == 8 && m.bonds[b].order == BondOrder::Double) return true;
    }
    return false;
  };
  int count = 0;
  for (const Bond& b : m.bonds) {
    if (b.order != BondOrder::Single || b.smallest_ring_size != 0) continue;
    if (heavy_degree(m, adj, b.a) < 2 || heavy_degree(m, adj, b.b) < 2) continue;
    const int za = m.atoms[b.a].element;
    const int zb = m.atoms[b.b].element;
    if ((za == 7 && is_amide_carbon(b.b)) || (zb == 7 && is_amide_carbon(b.a))) continue;
    ++count;
  }
  return count;
}

int count_hbd(const Molecule& m) {
  return static_cast<int>(std::count_if(m.atoms.begin(), m.atoms.end(), [](const Atom& a) {
    return (a.element == 7 || a.element == 8) && a.implicit_h > 0;
  }));
}

int count_hba(const Molecule& m) {
  return static_cast<int>(std::count_if(m.atoms.begin(), m.atoms.end(), [](const Atom& a) {
    return a.element == 7 || a.element == 8;
  }));
}

double tpsa(const Molecule& m) {
  const Adjacency adj(m);
  double total = 0.0;
  for (int i = 0; i < m.atom_count(); ++i) {
    const Atom& a = m.atoms[i];
    if (a.element == 7) {
      total += nitrogen_psa(a, environment(m, adj, i), in_three_ring(m, adj, i));
    } else if (a.element == 8) {
      total += oxygen_psa(a, environment(m, adj, i), in_three_ring(m, adj, i));
    }
  }
  return total;
}

double crippen_logp(const Molecule& m) {
  const Adjacency adj(m);
  double total = 0.0;
  for (int i = 0; i < m.atom_count(); ++i) {
    const Atom& a = m.atoms[i];
    double c = 0.0;
    switch (a.element) {
      case 1: c = 0.1230; break;
      case 6: c = carbon_logp(m, adj, i); break;
      case 7: c = nitrogen_logp(a, environment(m, adj, i)); break;
      case 8: c = oxygen_logp(m, adj, i); break;
      case 9: c = 0.4202; break;
      case 15: c = 0.8612; break;
      case 16: c = a.aromatic ? 0.6237 : 0.6482; break;
      case 17: c = 0.6895; break;
      case 35: c = 0.8456; break;
      case 53: c = 0.8857; break;
      default: c = 0.0; break;
    }
    total += c + a.implicit_h * hydrogen_logp(a.element);
  }
  return total;
}

double radius_of_gyration(const Molecule& m, const std::vector<Vec3>& coords) {
  double mass = 0.0;
  Vec3 centre{0.0, 0.0, 0.0};
  for (int i = 0; i < m.atom_count(); ++i) {
    const double w = elements::lookup(m.atoms[i].element).atomic_mass;
    mass += w;
    for (int k = 0; k < 3; ++k) centre[k] += w * coords[i][k];
  }
  if (mass == 0.0) return 0.0;
  for (double& c : centre) c /= mass;
  double sum = 0.0;
  for (int i = 0; i < m.atom_count(); ++i) {
    const double w = elements::lookup(m.atoms[i].element).atomic_mass;
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += (coords[i][k] - centre[k]) * (coords[i][k] - centre[k]);
    sum += w * d2;
  }
  return std::sqrt(sum / mass);
}

std::vector<Vec3> layout_2d(const Molecule& m) {
  const int n = m.atom_count();
  std::vector<Vec3> pos(n, Vec3{0.0, 0.0, 0.0});
  if (n <= 1) return pos;

  // Weighted graph distances (sum of covalent radii along bonds).
  constexpr double kInf = 1e300;
  std::vector<double> dist(static_cast<std::size_t>(n) * n, kInf);
  auto D = [&](int i, int j) -> double& { return dist[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) D(i, i) = 0.0;
  for (const Bond& b : m.bonds) {
    const double len = elements::lookup(m.atoms[b.a].element).covalent_radius +
                       elements::lookup(m.atoms[b.b].element).covalent_radius;
    D(b.a, b.b) = std::min(D(b.a, b.b), len);
    D(b.b, b.a) = D(b.a, b.b);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (D(i, k) == kInf) continue;
      for (int j = 0; j < n; ++j) {
        if (D(i, k) + D(k, j) < D(i, j)) D(i, j) = D(i, k) + D(k, j);
      }
    }
  }
  double longest = 0.0;
  for (double d : dist) {
    if (d < kInf) longest = std::max(longest, d);
  }
  for (double& d : dist) {
    if (d == kInf) d = longest + 1.5;
  }

  const double r0 = 0.75 * n / M_PI + 0.5;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * M_PI * i / n;
    pos[i] = {r0 * std::cos(t), r0 * std::sin(t), 0.0};
  }
  for (int iter = 0; iter < 2000; ++iter) {
    double moved = 0.0;
    for (int i = 0; i < n; ++i) {
      double wx = 0.0, wy = 0.0, wsum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = D(i, j);
        const double w = 1.0 / (d * d);
        const double dx = pos[i][0] - pos[j][0];
        const double dy = pos[i][1] - pos[j][1];
        const double len = std::hypot(dx, dy);
        double ux = 0.0, uy = 0.0;
        if (len > 1e-12) {
          ux = dx / len;
          uy = dy / len;
        }
        wx += w * (pos[j][0] + d * ux);
        wy += w * (pos[j][1] + d * uy);
        wsum += w;
      }
      const double nx = wx / wsum;
      const double ny = wy / wsum;
      moved = std::max(moved, std::hypot(nx - pos[i][0], ny - pos[i][1]));
      pos[i][0] = nx;
      pos[i][1] = ny;
    }
    if (moved < 1e-10) break;
  }
  return pos;
}

std::vector<Vec3> coordinates(const Molecule& m, bool use_3d) {
  if (use_3d && m.has_3d) {
    std::vector<Vec3> out;
    out.reserve(m.atoms.size());
    for (const Atom& a : m.atoms) out.push_back(a.position.value_or(Vec3{0.0, 0.0, 0.0}));
    return out;
  }
  return layout_2d(m);
}

Descriptors compute_descriptors(const Molecule& m, const FeaturizeOptions& opt) {
  Descriptors d;
  d.chiral_centers = count_chiral_centers(m);
  d.hbd = count_hbd(m);
  d.hba = count_hba(m);
  d.rotatable_bonds = count_rotatable_bonds(m);
  d.tpsa = tpsa(m);
  d.logp = crippen_logp(m);
  int carbons = 0;
  int sp3 = 0;
  for (const Atom& a : m.atoms) {
    if (a.element != 6) continue;
    ++carbons;
    if (a.hybridization == Hybridization::SP3) ++sp3;
  }
  d.sp3_fraction = carbons == 0 ? 0.0 : static_cast<double>(sp3) / carbons;
  d.radius_of_gyration = radius_of_gyration(m, coordinates(m, opt.use_3d));
  return d;
}

}  // namespace molmp
