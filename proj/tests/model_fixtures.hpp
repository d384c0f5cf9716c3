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

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "molmp/mpnn.hpp"

namespace molmp::testing {

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : m.data) v = g(rng);
  return m;
}

// Random directed multigraph-free batch. Edge orientation is arbitrary.
inline Batch random_batch(std::mt19937_64& rng, int n_graphs, int min_nodes, int max_nodes, double edge_prob,
                          const ModelSpec& spec) {
  std::uniform_int_distribution<int> size(min_nodes, max_nodes);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution link(edge_prob);
  Batch b;
  b.n_graphs = n_graphs;
  int offset = 0;
  for (int g = 0; g < n_graphs; ++g) {
    const int n = size(rng);
    b.graph_offsets.push_back(offset);
    for (int i = 0; i < n; ++i) b.node_graph.push_back(g);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!link(rng)) continue;
        const bool flip = coin(rng);
        b.src.push_back(offset + (flip ? j : i));
        b.dst.push_back(offset + (flip ? i : j));
        b.edge_graph.push_back(g);
      }
    }
    b.labels.push_back(coin(rng) ? 1.0 : 0.0);
    offset += n;
  }
  b.graph_offsets.push_back(offset);
  b.x = gaussian(offset, spec.atom_features, rng);
  b.edge_attr = gaussian(b.n_edges(), spec.bond_features, rng);
  b.u = gaussian(n_graphs, spec.global_features, rng);
  return b;
}

struct Permuted {
  Batch batch;
  std::vector<int> node_map;  // old node index -> new node index
};

// Relabel nodes within each graph and shuffle the edge list, keeping every
// edge's direction.
inline Permuted permute(const Batch& b, std::mt19937_64& rng) {
  Permuted p;
  p.node_map.resize(b.n_nodes());
  for (int g = 0; g < b.n_graphs; ++g) {
    std::vector<int> order(b.graph_offsets[g + 1] - b.graph_offsets[g]);
    std::iota(order.begin(), order.end(), b.graph_offsets[g]);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) p.node_map[order[k]] = b.graph_offsets[g] + static_cast<int>(k);
  }
  Batch& o = p.batch;
  o = b;
  for (int i = 0; i < b.n_nodes(); ++i) {
    std::copy(b.x.row(i), b.x.row(i) + b.x.cols, o.x.row(p.node_map[i]));
  }
  std::vector<int> edges(b.n_edges());
  std::iota(edges.begin(), edges.end(), 0);
  std::shuffle(edges.begin(), edges.end(), rng);
  for (int k = 0; k < b.n_edges(); ++k) {
    const int e = edges[k];
    o.src[k] = p.node_map[b.src[e]];
    o.dst[k] = p.node_map[b.dst[e]];
    o.edge_graph[k] = b.edge_graph[e];
    std::copy(b.edge_attr.row(e), b.edge_attr.row(e) + b.edge_attr.cols, o.edge_attr.row(k));
  }
  return p;
}

// Perturb every parameter, including batch-norm buffers, away from its
// initial value so that no block is an identity.
inline void scramble(Model& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::uniform_real_distribution<double> positive(0.5, 2.0);
  for (auto* p : model.params().parameters()) {
    const bool is_var = p->name.size() > 4 && p->name.compare(p->name.size() - 4, 4, ".var") == 0;
    for (double& v : p->value.data) v = is_var ? positive(rng) : v + jitter(rng);
  }
}

}  // namespace molmp::testing
