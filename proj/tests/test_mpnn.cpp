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

#include "doctest.h"
#include "gradcheck.hpp"
#include "model_fixtures.hpp"
#include "molmp/chemio.hpp"
#include "molmp/error.hpp"
#include "corpus.hpp"

using namespace molmp;
using molmp::testing::permute;
using molmp::testing::random_batch;
using molmp::testing::scramble;

namespace {

using Vec = std::vector<double>;
using Rows = std::vector<Vec>;

// Plain-loop evaluation-mode forward pass, written per node from the
// message-passing equations.
class Reference {
 public:
  Reference(const Model& m) : m_(m), spec_(m.spec()) {}

  Vec run(const Batch& b, Rows* node_out = nullptr) const {
    const int n = b.n_nodes();
    const int ne = b.n_edges();
    Rows x(n), e(ne), u(b.n_graphs);
    for (int i = 0; i < n; ++i) x[i] = bn("bn.x", Vec(b.x.row(i), b.x.row(i) + b.x.cols));
    for (int k = 0; k < ne; ++k) e[k] = bn("bn.e", Vec(b.edge_attr.row(k), b.edge_attr.row(k) + b.edge_attr.cols));
    for (int g = 0; g < b.n_graphs; ++g) u[g] = bn("bn.u", Vec(b.u.row(g), b.u.row(g) + b.u.cols));

    struct Edge {
      int from, to;
      const Vec* attr;
    };
    std::vector<Edge> edges;
    for (int k = 0; k < ne; ++k) edges.push_back({b.src[k], b.dst[k], &e[k]});
    const Variant v = spec_.variant;
    if (is_undirected(v)) {
      for (int k = 0; k < ne; ++k) edges.push_back({b.dst[k], b.src[k], &e[k]});
    }
    Rows msg;
    for (const auto& ed : edges) msg.push_back(mlp("msg", cat({x[ed.from], *ed.attr, x[ed.to]})));

    std::vector<int> degree(n, 0);
    for (const auto& ed : edges) {
      ++degree[ed.from];
      ++degree[ed.to];
    }

    Rows h(n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> in, out;
      for (std::size_t k = 0; k < edges.size(); ++k) {
        if (edges[k].to == i) in.push_back(static_cast<int>(k));
        if (edges[k].from == i) out.push_back(static_cast<int>(k));
      }
      Vec input = has_self_node(v) ? x[i] : Vec{};
      auto pool_max = [&](const std::vector<int>& ks, const std::vector<double>& w) {
        Vec r(spec_.hidden, 0.0);
        for (std::size_t q = 0; q < ks.size(); ++q) {
          for (int c = 0; c < spec_.hidden; ++c) {
            const double val = msg[ks[q]][c] * w[q];
            r[c] = q == 0 ? val : std::max(r[c], val);
          }
        }
        return r;
      };
      auto ones = [](std::size_t k) { return std::vector<double>(k, 1.0); };
      // Softmax over edges whose receiving end is i; `forward` selects the
      // end that receives.
      auto alphas = [&](int head, const std::vector<int>& ks, bool forward) {
        std::vector<double> s;
        for (int k : ks) {
          const auto& ed = edges[k];
          const Vec& recv = forward ? x[ed.to] : x[ed.from];
          const Vec& send = forward ? x[ed.from] : x[ed.to];
          s.push_back(score(head, send, *ed.attr, recv));
        }
        double mx = -1e300;
        for (double z : s) mx = std::max(mx, z);
        double tot = 0.0;
        for (double& z : s) tot += (z = std::exp(z - mx));
        for (double& z : s) z /= tot;
        return s;
      };
      switch (v) {
        case Variant::MP:
          append(input, pool_max(in, ones(in.size())));
          h[i] = mlp("node", input);
          break;
        case Variant::BMP:
        case Variant::BMP_SN:
          append(input, pool_max(in, ones(in.size())));
          append(input, pool_max(out, ones(out.size())));
          h[i] = mlp("node", input);
          break;
        case Variant::CBMP: {
          std::vector<double> wi, wo;
          for (int k : in) wi.push_back(1.0 / (degree[edges[k].from] * degree[edges[k].to]));
          for (int k : out) wo.push_back(1.0 / (degree[edges[k].from] * degree[edges[k].to]));
          append(input, pool_max(in, wi));
          append(input, pool_max(out, wo));
          h[i] = mlp("node", input);
          break;
        }
        case Variant::AMP:
          for (int head = 0; head < spec_.heads; ++head) append(input, pool_max(in, alphas(head, in, true)));
          h[i] = mlp("node", input);
          break;
        case Variant::ABMP:
        case Variant::ABMP_SN:
          for (int head = 0; head < spec_.heads; ++head) append(input, pool_max(in, alphas(head, in, true)));
          for (int head = 0; head < spec_.heads; ++head) append(input, pool_max(out, alphas(head, out, false)));
          h[i] = mlp("node", input);
          break;
        case Variant::UMP: {
          Vec mean(spec_.hidden, 0.0);
          for (int k : in) {
            const Vec inner = mlp("node1", msg[k]);
            for (int c = 0; c < spec_.hidden; ++c) mean[c] += inner[c] / static_cast<double>(in.size());
          }
          append(input, mean);
          h[i] = mlp("node2", input);
          break;
        }
        case Variant::AUMP:
          for (int head = 0; head < spec_.heads; ++head) {
            const auto a = alphas(head, in, true);
            Vec acc(spec_.hidden, 0.0);
            for (std::size_t q = 0; q < in.size(); ++q) {
              const Vec inner = mlp("node1", msg[in[q]]);
              for (int c = 0; c < spec_.hidden; ++c) acc[c] += a[q] * inner[c];
            }
            append(input, acc);
          }
          h[i] = mlp("node2", input);
          break;
      }
    }
    if (node_out) *node_out = h;

    Vec pred;
    for (int g = 0; g < b.n_graphs; ++g) {
      Vec pool(spec_.hidden, 0.0);
      const int lo = b.graph_offsets[g];
      const int hi = b.graph_offsets[g + 1];
      for (int i = lo; i < hi; ++i) {
        for (int c = 0; c < spec_.hidden; ++c) {
          if (is_undirected(v)) {
            pool[c] += h[i][c] / (hi - lo);
          } else {
            pool[c] = i == lo ? h[i][c] : std::max(pool[c], h[i][c]);
          }
        }
      }
      pred.push_back(mlp("global", cat({pool, u[g]}))[0]);
    }
    return pred;
  }

 private:
  const Matrix& p(const std::string& name) const { return m_.params().at(name).value; }

  static Vec cat(std::initializer_list<Vec> parts) {
    Vec r;
    for (const auto& q : parts) r.insert(r.end(), q.begin(), q.end());
    return r;
  }
  static void append(Vec& a, const Vec& b) { a.insert(a.end(), b.begin(), b.end()); }

  Vec bn(const std::string& name, const Vec& in) const {
    Vec r(in.size());
    for (std::size_t c = 0; c < in.size(); ++c) {
      const int j = static_cast<int>(c);
      r[c] = (in[c] - p(name + ".mean")(0, j)) / std::sqrt(p(name + ".var")(0, j) + 1e-5) * p(name + ".gamma")(0, j) +
             p(name + ".beta")(0, j);
    }
    return r;
  }

  Vec linear(const Matrix& w, const Matrix* b, const Vec& in) const {
    REQUIRE(static_cast<int>(in.size()) == w.rows);
    Vec r(w.cols, 0.0);
    for (int j = 0; j < w.cols; ++j) {
      double s = b ? (*b)(0, j) : 0.0;
      for (int i = 0; i < w.rows; ++i) s += in[i] * w(i, j);
      r[j] = s;
    }
    return r;
  }

  Vec mlp(const std::string& name, const Vec& in) const {
    Vec h = linear(p(name + ".l1.w"), &p(name + ".l1.b"), in);
    for (double& z : h) z = std::max(0.0, z);
    return linear(p(name + ".l2.w"), &p(name + ".l2.b"), h);
  }

  double score(int head, const Vec& send, const Vec& edge, const Vec& recv) const {
    const std::string pre = "att." + std::to_string(head) + ".";
    const Vec z = cat({linear(p(pre + "recv"), nullptr, recv), linear(p(pre + "edge"), nullptr, edge),
                       linear(p(pre + "send"), nullptr, send)});
    const double s = linear(p(pre + "a"), nullptr, z)[0];
    return s > 0 ? s : spec_.leaky_slope * s;
  }

  const Model& m_;
  ModelSpec spec_;
};

ModelSpec small_spec(Variant v, int hidden = 8, int heads = 1) {
  ModelSpec s;
  s.variant = v;
  s.hidden = hidden;
  s.heads = uses_attention(v) ? heads : 1;
  return s;
}

Batch molecule_batch(const std::vector<std::string>& smiles) {
  const auto manifest = FeatureManifest::standard();
  std::vector<FeaturizedGraph> graphs;
  FeaturizeOptions opt;
  opt.use_3d = false;
  for (const auto& s : smiles) graphs.push_back(featurize(parse_smiles(s), full_mask(manifest), 1.0, opt));
  return make_batch(graphs);
}

}  // namespace

TEST_CASE("model matches a per-node loop evaluation for every variant") {
  std::mt19937_64 rng(11);
  for (Variant v : kAllVariants) {
    CAPTURE(to_string(v));
    Model model(small_spec(v, 7, 2), 3);
    scramble(model, 5);
    const Reference ref(model);
    for (int trial = 0; trial < 5; ++trial) {
      const Batch b = random_batch(rng, 3, 1, 6, 0.5, model.spec());
      Rows nodes;
      const Vec want = ref.run(b, &nodes);
      const Vec got = model.predict_raw(b);
      REQUIRE(got.size() == want.size());
      for (std::size_t g = 0; g < got.size(); ++g) CHECK(got[g] == doctest::Approx(want[g]).epsilon(1e-10));
      tc::Tape t(false);
      const auto out = model.forward(t, b);
      for (int i = 0; i < b.n_nodes(); ++i) {
        for (int c = 0; c < model.spec().hidden; ++c) {
          CHECK(std::abs(out.nodes.value()(i, c) - nodes[i][c]) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("variant names and spec validation") {
  for (Variant v : kAllVariants) CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("BMP+SN") == Variant::BMP_SN);
  CHECK(parse_variant("abmp+sn") == Variant::ABMP_SN);
  CHECK_THROWS_AS(parse_variant("GCN"), InputError);
  ModelSpec s;
  s.heads = 2;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.variant = Variant::ABMP;
  CHECK_NOTHROW(s.validate());
  s.dropout = 1.0;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.dropout = 0.2;
  s.task = Task::Regression;
  const auto back = ModelSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  s.hidden = 0;
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("make_batch offsets edges and labels") {
  const Batch b = molecule_batch({"CCO", "c1ccccc1", "O"});
  CHECK(b.n_graphs == 3);
  CHECK(b.n_nodes() == 10);
  CHECK(b.n_edges() == 8);
  CHECK(b.graph_offsets == std::vector<int>{0, 3, 9, 10});
  CHECK(b.labels == std::vector<double>{1.0, 1.0, 1.0});
  for (int k = 0; k < b.n_edges(); ++k) {
    CHECK(b.node_graph[b.src[k]] == b.edge_graph[k]);
    CHECK(b.node_graph[b.dst[k]] == b.edge_graph[k]);
  }
  Model model(small_spec(Variant::BMP), 1);
  Batch wrong = b;
  wrong.x = Matrix(b.n_nodes(), 3);
  CHECK_THROWS_AS(model.predict(wrong), InputError);
}

TEST_CASE("batched prediction equals per-graph prediction") {
  const std::vector<std::string> smiles(testing::kCorpus.begin(), testing::kCorpus.begin() + 6);
  const Batch all = molecule_batch(smiles);
  for (Variant v : kAllVariants) {
    CAPTURE(to_string(v));
    Model model(small_spec(v, 10, 2), 9);
    scramble(model, 2);
    const auto joint = model.predict(all);
    for (std::size_t g = 0; g < smiles.size(); ++g) {
      const auto alone = model.predict(molecule_batch({smiles[g]}));
      CHECK(alone[0] == doctest::Approx(joint[g]).epsilon(1e-12));
    }
  }
}

TEST_CASE("graph outputs are permutation invariant and node outputs equivariant") {
  std::mt19937_64 rng(21);
  for (Variant v : kAllVariants) {
    CAPTURE(to_string(v));
    Model model(small_spec(v, 8, 2), 4);
    scramble(model, 6);
    const Batch b = random_batch(rng, 2, 4, 9, 0.4, model.spec());
    tc::Tape t0(false);
    const auto base = model.forward(t0, b);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = permute(b, rng);
      tc::Tape t(false);
      const auto out = model.forward(t, p.batch);
      for (int g = 0; g < b.n_graphs; ++g) {
        worst = std::max(worst, std::abs(out.prediction.value()(g, 0) - base.prediction.value()(g, 0)));
      }
      for (int i = 0; i < b.n_nodes(); ++i) {
        for (int c = 0; c < model.spec().hidden; ++c) {
          worst = std::max(worst, std::abs(out.nodes.value()(p.node_map[i], c) - base.nodes.value()(i, c)));
        }
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("directional variants distinguish edge orientation") {
  std::mt19937_64 rng(4);
  for (Variant v : {Variant::MP, Variant::BMP, Variant::ABMP}) {
    CAPTURE(to_string(v));
    Model model(small_spec(v, 16), 8);
    scramble(model, 3);
    const Batch b = random_batch(rng, 1, 6, 6, 0.6, model.spec());
    Batch flipped = b;
    std::swap(flipped.src, flipped.dst);
    tc::Tape t0(false);
    tc::Tape t1(false);
    const Matrix n0 = model.forward(t0, b).nodes.value();
    const Matrix n1 = model.forward(t1, flipped).nodes.value();
    double node_diff = 0.0;
    for (std::size_t k = 0; k < n0.data.size(); ++k) node_diff = std::max(node_diff, std::abs(n0.data[k] - n1.data[k]));
    CHECK(node_diff > 1e-6);
    CHECK(std::abs(model.predict_raw(b)[0] - model.predict_raw(flipped)[0]) > 1e-8);
  }
  Model ump(small_spec(Variant::UMP), 8);
  scramble(ump, 3);
  const Batch b = random_batch(rng, 1, 6, 6, 0.6, ump.spec());
  Batch flipped = b;
  std::swap(flipped.src, flipped.dst);
  CHECK(ump.predict_raw(b)[0] == doctest::Approx(ump.predict_raw(flipped)[0]).epsilon(1e-12));
}

TEST_CASE("CBMP equals BMP bitwise on degree-one graphs") {
  Model bmp(small_spec(Variant::BMP, 16), 12);
  Model cbmp(small_spec(Variant::CBMP, 16), 12);
  scramble(bmp, 1);
  scramble(cbmp, 1);
  const Batch b = molecule_batch({"O=O", "N#N", "Cl", "CC", "[Na+].[Cl-]"});
  CHECK(bmp.predict_raw(b) == cbmp.predict_raw(b));
}

TEST_CASE("ABMP equals BMP when each node has at most one incoming edge per direction") {
  Model bmp(small_spec(Variant::BMP, 16), 12);
  Model abmp(small_spec(Variant::ABMP, 16), 13);
  scramble(bmp, 1);
  for (auto* p : abmp.params().parameters()) {
    if (bmp.params().contains(p->name)) p->value = bmp.params().at(p->name).value;
  }
  std::mt19937_64 rng(2);
  // Directed cycles and paths.
  Batch b;
  b.n_graphs = 2;
  b.src = {0, 1, 2, 3, 4, 5, 6};
  b.dst = {1, 2, 3, 0, 5, 6, 7};
  b.edge_graph = {0, 0, 0, 0, 1, 1, 1};
  b.node_graph = {0, 0, 0, 0, 1, 1, 1, 1};
  b.graph_offsets = {0, 4, 8};
  b.x = testing::gaussian(8, 6, rng);
  b.edge_attr = testing::gaussian(7, 4, rng);
  b.u = testing::gaussian(2, 6, rng);
  CHECK(bmp.predict_raw(b) == abmp.predict_raw(b));
}

TEST_CASE("attention coefficients sum to one per receiving node") {
  std::mt19937_64 rng(8);
  for (Variant v : {Variant::AMP, Variant::AUMP, Variant::ABMP, Variant::ABMP_SN}) {
    CAPTURE(to_string(v));
    Model model(small_spec(v, 8, 3), 2);
    scramble(model, 9);
    Batch b = random_batch(rng, 2, 3, 8, 0.5, model.spec());
    tc::Tape t(false);
    const auto out = model.forward(t, b);
    const int directions = v == Variant::ABMP || v == Variant::ABMP_SN ? 2 : 1;
    REQUIRE(static_cast<int>(out.attention.size()) == directions * 3);
    std::vector<int> recv_fwd = b.dst;
    std::vector<int> recv_bwd = b.src;
    if (is_undirected(v)) {
      recv_fwd.insert(recv_fwd.end(), b.src.begin(), b.src.end());
    }
    for (std::size_t a = 0; a < out.attention.size(); ++a) {
      const auto& recv = directions == 2 && a % 2 == 1 ? recv_bwd : recv_fwd;
      std::vector<double> total(b.n_nodes(), 0.0);
      std::vector<int> seen(b.n_nodes(), 0);
      const Matrix& alpha = out.attention[a].value();
      REQUIRE(alpha.rows == static_cast<int>(recv.size()));
      for (std::size_t k = 0; k < recv.size(); ++k) {
        CHECK(alpha(static_cast<int>(k), 0) > 0.0);
        total[recv[k]] += alpha(static_cast<int>(k), 0);
        ++seen[recv[k]];
      }
      for (int i = 0; i < b.n_nodes(); ++i) {
        if (seen[i] > 0) CHECK(total[i] == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("parameter counts at 250 hidden channels") {
  auto count = [](Variant v) { return Model(small_spec(v, 250), 0).parameter_count(); };
  // Input normalization 32, message MLP 67000, global MLP 64501; node MLP
  // input widths are 500 (BMP), 506 (BMP_SN), 750 (UMP node MLP 2 plus a
  // 250-wide node MLP 1). Attention adds 6*250 + 4*250 + 6*250 + 750 per head.
  CHECK(count(Variant::BMP) == 319533);
  CHECK(count(Variant::CBMP) == 319533);
  CHECK(count(Variant::BMP_SN) == 321033);
  CHECK(count(Variant::ABMP) == 324283);
  CHECK(count(Variant::ABMP_SN) == 325783);
  CHECK(count(Variant::UMP) == 384033);
  CHECK(count(Variant::UMP) > count(Variant::ABMP_SN));
  CHECK(count(Variant::ABMP_SN) > count(Variant::ABMP));
  CHECK(count(Variant::ABMP) > count(Variant::BMP_SN));
  CHECK(count(Variant::BMP_SN) > count(Variant::CBMP));
}

TEST_CASE("relevance scores span the unit interval per molecule") {
  CHECK(min_max({2.0, 2.0}) == std::vector<double>{0.5, 0.5});
  CHECK(min_max({1.0, 3.0, 2.0}) == std::vector<double>{0.0, 1.0, 0.5});
  Model model(small_spec(Variant::BMP), 3);
  scramble(model, 3);
  const auto rel = model.relevance(molecule_batch({"CC(=O)Oc1ccccc1C(=O)O", "CCO"}));
  REQUIRE(rel.size() == 2);
  CHECK(rel[0].size() == 13);
  for (const auto& mol : rel) {
    CHECK(*std::min_element(mol.begin(), mol.end()) == 0.0);
    CHECK(*std::max_element(mol.begin(), mol.end()) == 1.0);
  }
}

TEST_CASE("analytic gradients agree with finite differences for every variant") {
  std::mt19937_64 rng(17);
  for (Variant v : kAllVariants) {
    CAPTURE(to_string(v));
    Model model(small_spec(v, 5, 2), 23);
    scramble(model, 4);
    const Batch b = random_batch(rng, 3, 2, 5, 0.6, model.spec());
    auto loss = [&](tc::Tape& t) { return tc::bce_with_logits(model.forward(t, b).prediction, b.labels); };
    const auto res = testing::gradient_check(model.params().parameters(), loss, 1e-4);
    CAPTURE(res.worst);
    CHECK(res.pass_fraction() >= 0.99);
  }
}
