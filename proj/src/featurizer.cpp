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

#include "molmp/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "molmp/elements.hpp"
#include "molmp/error.hpp"

namespace molmp {

namespace {

double guarded(double numerator, double denominator) {
  return numerator / (denominator == 0.0 ? 1e-10 : denominator);
}

const char* group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::Atom: return "atom";
    case FeatureGroup::Bond: return "bond";
    case FeatureGroup::Global: return "global";
  }
  return "atom";
}

FeatureGroup parse_group(const std::string& s) {
  if (s == "atom") return FeatureGroup::Atom;
  if (s == "bond") return FeatureGroup::Bond;
  if (s == "global") return FeatureGroup::Global;
  throw InputError("unknown feature group '" + s + "'");
}

double hybridization_value(Hybridization h) {
  switch (h) {
    case Hybridization::SP: return 0.0;
    case Hybridization::SP2: return 0.5;
    case Hybridization::SP3: return 1.0;
    case Hybridization::Other: return 1.0;
  }
  return 1.0;
}

double bond_type_value(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 1.0 / 2.0;
    case BondOrder::Aromatic: return 1.5 / 2.0;
    case BondOrder::Double: return 2.0 / 2.0;
    case BondOrder::Triple: return 2.0 / 2.0;
  }
  return 0.5;
}

double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

// Column positions, within each group, of the features a mask keeps.
std::vector<int> kept_columns(const FeatureManifest& manifest, const FeatureMask& mask, FeatureGroup g) {
  std::vector<int> cols;
  for (int i = 0; i < manifest.size(); ++i) {
    if (manifest[i].group == g && mask[i]) cols.push_back(manifest.group_offset(i));
  }
  return cols;
}

void check_mask(const FeatureManifest& manifest, const FeatureMask& mask) {
  if (static_cast<int>(mask.size()) != manifest.size()) {
    throw InputError("feature mask has " + std::to_string(mask.size()) + " entries, manifest has " +
                     std::to_string(manifest.size()));
  }
}

}  // namespace

FeatureManifest::FeatureManifest(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  for (std::size_t i = 1; i < features_.size(); ++i) {
    if (static_cast<int>(features_[i].group) < static_cast<int>(features_[i - 1].group)) {
      throw InputError("manifest features must be grouped atom, bond, global");
    }
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    for (std::size_t j = i + 1; j < features_.size(); ++j) {
      if (features_[i].name == features_[j].name) throw InputError("duplicate feature " + features_[i].name);
    }
  }
}

const FeatureManifest& FeatureManifest::standard() {
  static const FeatureManifest manifest({
      {"atomic_number", FeatureGroup::Atom},
      {"hybridization", FeatureGroup::Atom},
      {"electronegativity", FeatureGroup::Atom},
      {"dipole_polarizability", FeatureGroup::Atom},
      {"vdw_radius", FeatureGroup::Atom},
      {"buried_volume", FeatureGroup::Atom},
      {"bond_length", FeatureGroup::Bond},
      {"conjugated", FeatureGroup::Bond},
      {"bond_type", FeatureGroup::Bond},
      {"ring_size", FeatureGroup::Bond},
      {"chiral_centers", FeatureGroup::Global},
      {"hydrogen_balance", FeatureGroup::Global},
      {"rotatable_bonds", FeatureGroup::Global},
      {"solubility", FeatureGroup::Global},
      {"sp3_fraction", FeatureGroup::Global},
      {"radius_of_gyration", FeatureGroup::Global},
  });
  return manifest;
}

int FeatureManifest::count(FeatureGroup g) const noexcept {
  return static_cast<int>(std::count_if(features_.begin(), features_.end(),
                                        [g](const FeatureSpec& f) { return f.group == g; }));
}

int FeatureManifest::group_offset(int i) const {
  int offset = 0;
  for (int k = 0; k < i; ++k) {
    if (features_[k].group == features_[i].group) ++offset;
  }
  return offset;
}

int FeatureManifest::index_of(std::string_view name) const noexcept {
  for (int i = 0; i < size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return -1;
}

std::string FeatureManifest::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& f : features_) {
    for (char c : f.name) mix(static_cast<unsigned char>(c));
    mix(0);
    mix(static_cast<unsigned char>(f.group));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string FeatureManifest::to_json() const {
  nlohmann::json j;
  j["hash"] = hash();
  j["features"] = nlohmann::json::array();
  for (const auto& f : features_) j["features"].push_back({{"name", f.name}, {"group", group_name(f.group)}});
  return j.dump(2);
}

FeatureManifest FeatureManifest::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid feature manifest: ") + e.what());
  }
  std::vector<FeatureSpec> specs;
  for (const auto& f : j.at("features")) {
    specs.push_back({f.at("name").get<std::string>(), parse_group(f.at("group").get<std::string>())});
  }
  FeatureManifest manifest(std::move(specs));
  if (j.contains("hash") && j["hash"].get<std::string>() != manifest.hash()) {
    throw InputError("feature manifest hash mismatch");
  }
  return manifest;
}

FeatureMask full_mask(const FeatureManifest& manifest) {
  return FeatureMask(static_cast<std::size_t>(manifest.size()), true);
}

FeatureMask mask_without(const FeatureManifest& manifest, const std::vector<std::string>& names) {
  FeatureMask mask = full_mask(manifest);
  for (const auto& n : names) {
    const int i = manifest.index_of(n);
    if (i < 0) throw InputError("unknown feature '" + n + "'");
    mask[i] = false;
  }
  return mask;
}

std::vector<std::string> active_names(const FeatureManifest& manifest, const FeatureMask& mask) {
  check_mask(manifest, mask);
  std::vector<std::string> out;
  for (int i = 0; i < manifest.size(); ++i) {
    if (mask[i]) out.push_back(manifest[i].name);
  }
  return out;
}

double buried_volume(const Molecule& m, int atom, double radius, double spacing) {
  if (!m.has_3d) return Adjacency(m).degree(atom) / 4.0;
  const Vec3 centre = m.atoms[atom].position.value();
  // Atoms whose vdW sphere can reach into the probe sphere.
  std::vector<std::pair<Vec3, double>> nearby;
  for (const Atom& a : m.atoms) {
    const double r = elements::lookup(a.element).vdw_radius / 100.0;
    const Vec3 p = a.position.value();
    if (distance(p, centre) <= radius + r) nearby.emplace_back(p, r * r);
  }
  const int n = static_cast<int>(std::ceil(radius / spacing));
  const double r2 = radius * radius + 1e-12;
  long total = 0;
  long occupied = 0;
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      for (int k = -n; k <= n; ++k) {
        const double dx = i * spacing, dy = j * spacing, dz = k * spacing;
        if (dx * dx + dy * dy + dz * dz > r2) continue;
        ++total;
        const Vec3 g{centre[0] + dx, centre[1] + dy, centre[2] + dz};
        for (const auto& [p, rr] : nearby) {
          const double ex = g[0] - p[0], ey = g[1] - p[1], ez = g[2] - p[2];
          if (ex * ex + ey * ey + ez * ez <= rr) {
            ++occupied;
            break;
          }
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(occupied) / static_cast<double>(total);
}

std::vector<double> atom_features(const Molecule& m, int atom, const FeaturizeOptions& opt) {
  const Atom& a = m.atoms.at(atom);
  const auto& e = elements::lookup(a.element);
  double bv = 0.0;
  if (opt.use_3d && m.has_3d) {
    bv = buried_volume(m, atom, opt.probe_radius, opt.grid_spacing);
  } else {
    bv = Adjacency(m).degree(atom) / 4.0;
  }
  return {
      (a.element - 1) / 78.0,
      hybridization_value(a.hybridization),
      (e.electronegativity - 0.9) / 3.1,
      (e.dipole_polarizability - 4.5) / 31.5,
      (e.vdw_radius - 120.0) / 46.0,
      bv,
  };
}

std::vector<double> bond_features(const Molecule& m, int bond, const FeaturizeOptions& opt) {
  const Bond& b = m.bonds.at(bond);
  double length = 0.0;
  if (opt.use_3d && m.has_3d) {
    length = distance(m.atoms[b.a].position.value(), m.atoms[b.b].position.value());
  } else {
    length = elements::lookup(m.atoms[b.a].element).covalent_radius +
             elements::lookup(m.atoms[b.b].element).covalent_radius;
  }
  if (b.order == BondOrder::Triple) {
    spdlog::debug("triple bond {}-{} in '{}' encoded as double", b.a, b.b, m.name);
  }
  return {
      length - 1.0,
      b.conjugated ? 1.0 : 0.0,
      bond_type_value(b.order),
      b.smallest_ring_size == 0 ? 0.0 : std::min(1.0, b.smallest_ring_size / 8.0),
  };
}

std::vector<double> global_features(const Molecule& m, const FeaturizeOptions& opt) {
  const Descriptors d = compute_descriptors(m, opt);
  return {
      d.chiral_centers / 6.0,
      guarded(guarded(d.hbd, 5.0) - guarded(d.hba, 10.0), 10.0),
      d.rotatable_bonds / 10.0,
      (d.tpsa + d.logp) / 145.0,
      d.sp3_fraction,
      d.radius_of_gyration,
  };
}

FeaturizedGraph featurize(const Molecule& m, const FeatureMask& mask, std::optional<double> label,
                          const FeaturizeOptions& opt) {
  const auto& manifest = FeatureManifest::standard();
  check_mask(manifest, mask);
  if (m.atoms.empty()) throw InputError("cannot featurize a molecule with no atoms");

  FeaturizedGraph full;
  full.n_atoms = m.atom_count();
  full.feature_mask = full_mask(manifest);
  full.name = m.name;
  full.smiles = m.source_smiles;
  full.y = label;

  const int fa = manifest.count(FeatureGroup::Atom);
  full.x = Matrix(m.atom_count(), fa);
  for (int i = 0; i < m.atom_count(); ++i) {
    const auto row = atom_features(m, i, opt);
    std::copy(row.begin(), row.end(), full.x.row(i));
  }
  const int fb = manifest.count(FeatureGroup::Bond);
  full.edge_attr = Matrix(m.bond_count(), fb);
  int triples = 0;
  for (int b = 0; b < m.bond_count(); ++b) {
    const Bond& bond = m.bonds[b];
    full.edge_index.push_back({std::min(bond.a, bond.b), std::max(bond.a, bond.b)});
    const auto row = bond_features(m, b, opt);
    std::copy(row.begin(), row.end(), full.edge_attr.row(b));
    if (bond.order == BondOrder::Triple) ++triples;
  }
  if (triples > 0) {
    static std::once_flag warned;
    std::call_once(warned, [] { spdlog::warn("triple bonds are encoded with the double-bond type value"); });
  }
  full.u = global_features(m, opt);

  auto out = apply_mask(full, manifest, mask);
  for (int i = 0; i < manifest.size(); ++i) {
    if (!mask[i]) continue;
    // Values outside [-2, 2] are unusual for the normalized features.
    auto report = [&](double v) {
      if (v < -2.0 || v > 2.0) spdlog::debug("feature {} = {} outside [-2, 2] for '{}'", manifest[i].name, v, m.name);
    };
    const int col = manifest.group_offset(i);
    if (manifest[i].group == FeatureGroup::Atom) {
      for (int r = 0; r < full.x.rows; ++r) report(full.x(r, col));
    } else if (manifest[i].group == FeatureGroup::Bond) {
      for (int r = 0; r < full.edge_attr.rows; ++r) report(full.edge_attr(r, col));
    } else {
      report(full.u[col]);
    }
  }
  check_graph(out, manifest);
  return out;
}

FeaturizedGraph apply_mask(const FeaturizedGraph& g, const FeatureManifest& manifest, const FeatureMask& mask) {
  check_mask(manifest, mask);
  check_mask(manifest, g.feature_mask);
  for (int i = 0; i < manifest.size(); ++i) {
    if (mask[i] && !g.feature_mask[i]) {
      throw InputError("feature '" + manifest[i].name + "' was already removed from this graph");
    }
  }
  // Map a group-relative feature offset to the graph's current column.
  auto select = [&](FeatureGroup group) {
    const auto present = kept_columns(manifest, g.feature_mask, group);
    const auto wanted = kept_columns(manifest, mask, group);
    std::vector<int> cols;
    for (int w : wanted) {
      cols.push_back(static_cast<int>(std::find(present.begin(), present.end(), w) - present.begin()));
    }
    return cols;
  };
  auto take = [](const Matrix& src, const std::vector<int>& cols) {
    Matrix out(src.rows, static_cast<int>(cols.size()));
    for (int r = 0; r < src.rows; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) out(r, static_cast<int>(c)) = src(r, cols[c]);
    }
    return out;
  };
  FeaturizedGraph out = g;
  out.feature_mask = mask;
  out.x = take(g.x, select(FeatureGroup::Atom));
  out.edge_attr = take(g.edge_attr, select(FeatureGroup::Bond));
  out.u.clear();
  for (int c : select(FeatureGroup::Global)) out.u.push_back(g.u[c]);
  return out;
}

void check_graph(const FeaturizedGraph& g, const FeatureManifest& manifest) {
  check_mask(manifest, g.feature_mask);
  auto active = [&](FeatureGroup grp) { return static_cast<int>(kept_columns(manifest, g.feature_mask, grp).size()); };
  if (g.x.rows != g.n_atoms || g.x.cols != active(FeatureGroup::Atom)) {
    throw InvariantError("node feature matrix shape disagrees with the mask");
  }
  if (g.edge_attr.rows != static_cast<int>(g.edge_index.size()) || g.edge_attr.cols != active(FeatureGroup::Bond)) {
    throw InvariantError("edge feature matrix shape disagrees with the mask");
  }
  if (static_cast<int>(g.u.size()) != active(FeatureGroup::Global)) {
    throw InvariantError("global feature vector length disagrees with the mask");
  }
  for (const auto& e : g.edge_index) {
    if (e[0] < 0 || e[1] >= g.n_atoms || e[0] >= e[1]) throw InvariantError("edge index out of canonical order");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(g.x.data.begin(), g.x.data.end(), finite) ||
      !std::all_of(g.edge_attr.data.begin(), g.edge_attr.data.end(), finite) ||
      !std::all_of(g.u.begin(), g.u.end(), finite)) {
    throw InvariantError("non-finite feature value");
  }
}

}  // namespace molmp
