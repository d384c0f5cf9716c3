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

#include "molmp/diversity.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>

#include <spdlog/spdlog.h>

#include "molmp/error.hpp"

namespace molmp {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::vector<int>& tokens) {
  std::uint64_t h = 14695981039346656037ULL;
  for (int t : tokens) {
    for (int k = 0; k < 4; ++k) {
      h ^= static_cast<std::uint64_t>((t >> (8 * k)) & 0xff);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

int order_code(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 4;
  }
  return 0;
}

}  // namespace

Fingerprint::Fingerprint(int bits) : bits_(bits), words_((bits + 63) / 64, 0) {
  if (bits <= 0) throw InputError("fingerprint width must be positive");
}

void Fingerprint::set(int bit) { words_.at(bit / 64) |= std::uint64_t{1} << (bit % 64); }

bool Fingerprint::test(int bit) const { return (words_.at(bit / 64) >> (bit % 64)) & 1U; }

int Fingerprint::count() const noexcept {
  int c = 0;
  for (auto w : words_) c += std::popcount(w);
  return c;
}

std::string Fingerprint::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto w : words_) {
    for (int k = 0; k < 16; ++k) s += digits[(w >> (4 * k)) & 0xf];
  }
  return s;
}

Fingerprint fingerprint(const Molecule& m, int bits) {
  Fingerprint fp(bits);
  const Adjacency adj(m);
  std::vector<int> atoms;
  std::vector<int> bonds;
  std::vector<char> on_path(m.atom_count(), 0);

  auto emit = [&] {
    std::vector<int> fwd;
    std::vector<int> rev;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      fwd.push_back(m.atoms[atoms[i]].element);
      if (i < bonds.size()) fwd.push_back(order_code(m.bonds[bonds[i]].order));
    }
    rev.assign(fwd.rbegin(), fwd.rend());
    const std::uint64_t h = fnv1a(std::min(fwd, rev));
    fp.set(static_cast<int>(h % static_cast<std::uint64_t>(bits)));
    fp.set(static_cast<int>(mix(h) % static_cast<std::uint64_t>(bits)));
  };
  auto extend = [&](auto&& self, int atom) -> void {
    for (const auto& [nbr, bond] : adj[atom]) {
      if (on_path[nbr]) continue;
      atoms.push_back(nbr);
      bonds.push_back(bond);
      on_path[nbr] = 1;
      emit();
      if (static_cast<int>(bonds.size()) < kMaxPathBonds) self(self, nbr);
      on_path[nbr] = 0;
      atoms.pop_back();
      bonds.pop_back();
    }
  };
  for (int start = 0; start < m.atom_count(); ++start) {
    atoms = {start};
    bonds.clear();
    on_path[start] = 1;
    extend(extend, start);
    on_path[start] = 0;
  }
  if (m.bond_count() == 0) spdlog::info("'{}' has no bonds; its fingerprint is empty", m.name);
  return fp;
}

std::vector<Fingerprint> fingerprints(const std::vector<Molecule>& mols, int workers, int bits) {
  std::vector<Fingerprint> out(mols.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < mols.size(); i = next++) out[i] = fingerprint(mols[i], bits);
  };
  const int n = std::clamp(workers, 1, std::max(1, static_cast<int>(mols.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.bits_ != b.bits_) throw InputError("fingerprint widths differ");
  int both = 0;
  int either = 0;
  for (std::size_t i = 0; i < a.words_.size(); ++i) {
    both += std::popcount(a.words_[i] & b.words_[i]);
    either += std::popcount(a.words_[i] | b.words_[i]);
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / either;
}

double jaccard_distance(const Fingerprint& a, const Fingerprint& b) { return 1.0 - tanimoto(a, b); }

double shannon_entropy(std::span<const int> sizes) {
  if (sizes.empty()) throw InputError("entropy of an empty cluster report");
  double total = 0.0;
  for (int s : sizes) {
    if (s <= 0) throw InputError("cluster sizes must be positive");
    total += s;
  }
  double h = 0.0;
  for (int s : sizes) {
    const double p = s / total;
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;
}

ClusterReport cluster(const std::vector<Fingerprint>& fps, double threshold) {
  if (fps.empty()) throw InputError("nothing to cluster");
  const int n = static_cast<int>(fps.size());
  std::vector<int> neighbours(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (tanimoto(fps[i], fps[j]) >= threshold) {
        ++neighbours[i];
        ++neighbours[j];
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return neighbours[a] > neighbours[b]; });

  ClusterReport r;
  r.assignment.assign(n, -1);
  for (int i : order) {
    for (std::size_t c = 0; c < r.leaders.size(); ++c) {
      if (tanimoto(fps[i], fps[r.leaders[c]]) >= threshold) {
        r.assignment[i] = static_cast<int>(c);
        ++r.sizes[c];
        break;
      }
    }
    if (r.assignment[i] < 0) {
      r.assignment[i] = static_cast<int>(r.leaders.size());
      r.leaders.push_back(i);
      r.sizes.push_back(1);
    }
  }
  r.singletons = static_cast<int>(std::count(r.sizes.begin(), r.sizes.end(), 1));
  r.entropy = shannon_entropy(r.sizes);
  return r;
}

nlohmann::json ClusterReport::summary() const {
  return {{"molecules", assignment.size()},
          {"clusters", sizes.size()},
          {"singletons", singletons},
          {"entropy_bits", entropy},
          {"largest_cluster", sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end())}};
}

}  // namespace molmp
