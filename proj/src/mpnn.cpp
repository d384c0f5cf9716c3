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

#include "molmp/mpnn.hpp"

#include <algorithm>
#include <cmath>

#include "molmp/error.hpp"

namespace molmp {

using tc::Tape;
using tc::Var;

namespace {

struct VariantName {
  Variant v;
  std::string_view name;
};

constexpr VariantName kNames[] = {
    {Variant::MP, "MP"},         {Variant::AMP, "AMP"},   {Variant::UMP, "UMP"},
    {Variant::AUMP, "AUMP"},     {Variant::BMP, "BMP"},   {Variant::BMP_SN, "BMP_SN"},
    {Variant::CBMP, "CBMP"},     {Variant::ABMP, "ABMP"}, {Variant::ABMP_SN, "ABMP_SN"},
};

std::vector<int> iota_twice(int n) {
  std::vector<int> idx(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[i] = idx[i + n] = i;
  return idx;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
  for (const auto& n : kNames) {
    if (n.v == v) return n.name;
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string canon(name);
  std::replace(canon.begin(), canon.end(), '+', '_');
  std::replace(canon.begin(), canon.end(), '-', '_');
  std::transform(canon.begin(), canon.end(), canon.begin(), [](unsigned char c) { return std::toupper(c); });
  for (const auto& n : kNames) {
    if (n.name == canon) return n.v;
  }
  throw InputError("unknown model variant '" + std::string(name) + "'");
}

std::string_view to_string(Task t) noexcept {
  return t == Task::Classification ? "classification" : "regression";
}

Task parse_task(std::string_view name) {
  if (name == "classification") return Task::Classification;
  if (name == "regression") return Task::Regression;
  throw InputError("unknown task '" + std::string(name) + "'");
}

bool uses_attention(Variant v) noexcept {
  return v == Variant::AMP || v == Variant::AUMP || v == Variant::ABMP || v == Variant::ABMP_SN;
}

bool is_undirected(Variant v) noexcept { return v == Variant::UMP || v == Variant::AUMP; }

bool is_bidirectional(Variant v) noexcept {
  return v == Variant::BMP || v == Variant::BMP_SN || v == Variant::CBMP || v == Variant::ABMP ||
         v == Variant::ABMP_SN;
}

bool has_self_node(Variant v) noexcept {
  return v == Variant::BMP_SN || v == Variant::ABMP_SN || is_undirected(v);
}

void ModelSpec::validate() const {
  if (hidden <= 0) throw InputError("hidden channels must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must be in [0, 1)");
  if (heads < 1) throw InputError("attention heads must be at least 1");
  if (heads > 1 && !uses_attention(variant)) {
    throw InputError("variant " + std::string(to_string(variant)) + " has no attention heads");
  }
  if (atom_features < 0 || bond_features < 0 || global_features < 0) throw InputError("negative feature width");
  if (2 * atom_features + bond_features == 0) throw InputError("message input is empty");
}

nlohmann::json ModelSpec::to_json() const {
  return {{"variant", to_string(variant)}, {"task", to_string(task)},     {"hidden", hidden},
          {"dropout", dropout},            {"heads", heads},              {"leaky_slope", leaky_slope},
          {"atom_features", atom_features}, {"bond_features", bond_features}, {"global_features", global_features}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.task = parse_task(j.at("task").get<std::string>());
  s.hidden = j.at("hidden").get<int>();
  s.dropout = j.at("dropout").get<double>();
  s.heads = j.at("heads").get<int>();
  s.leaky_slope = j.at("leaky_slope").get<double>();
  s.atom_features = j.at("atom_features").get<int>();
  s.bond_features = j.at("bond_features").get<int>();
  s.global_features = j.at("global_features").get<int>();
  s.validate();
  return s;
}

Batch make_batch(const std::vector<const FeaturizedGraph*>& graphs) {
  if (graphs.empty()) throw InputError("empty batch");
  Batch b;
  b.n_graphs = static_cast<int>(graphs.size());
  const int fa = graphs[0]->x.cols;
  const int fb = graphs[0]->edge_attr.cols;
  const int fg = static_cast<int>(graphs[0]->u.size());
  int nodes = 0;
  int edges = 0;
  bool labelled = true;
  for (const auto* g : graphs) {
    if (g->x.cols != fa || g->edge_attr.cols != fb || static_cast<int>(g->u.size()) != fg) {
      throw InputError("graphs in a batch have different feature widths");
    }
    nodes += g->n_atoms;
    edges += static_cast<int>(g->edge_index.size());
    labelled = labelled && g->y.has_value();
  }
  b.x = Matrix(nodes, fa);
  b.edge_attr = Matrix(edges, fb);
  b.u = Matrix(b.n_graphs, fg);
  int node_off = 0;
  int edge_off = 0;
  for (int gi = 0; gi < b.n_graphs; ++gi) {
    const auto& g = *graphs[gi];
    b.graph_offsets.push_back(node_off);
    std::copy(g.x.data.begin(), g.x.data.end(), b.x.data.begin() + static_cast<long>(node_off) * fa);
    std::copy(g.edge_attr.data.begin(), g.edge_attr.data.end(),
              b.edge_attr.data.begin() + static_cast<long>(edge_off) * fb);
    std::copy(g.u.begin(), g.u.end(), b.u.row(gi));
    for (const auto& e : g.edge_index) {
      b.src.push_back(e[0] + node_off);
      b.dst.push_back(e[1] + node_off);
      b.edge_graph.push_back(gi);
    }
    b.node_graph.insert(b.node_graph.end(), static_cast<std::size_t>(g.n_atoms), gi);
    if (labelled) b.labels.push_back(*g.y);
    node_off += g.n_atoms;
    edge_off += static_cast<int>(g.edge_index.size());
  }
  b.graph_offsets.push_back(node_off);
  return b;
}

Batch make_batch(const std::vector<FeaturizedGraph>& graphs) {
  std::vector<const FeaturizedGraph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  return make_batch(ptrs);
}

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  const int h = spec_.hidden;
  const int fa = spec_.atom_features;
  const int fb = spec_.bond_features;
  const int fg = spec_.global_features;
  const int k = spec_.heads;
  const Variant v = spec_.variant;

  add_batch_norm("bn.x", fa);
  add_batch_norm("bn.e", fb);
  add_batch_norm("bn.u", fg);
  add_mlp("msg", 2 * fa + fb, h, h, rng);

  if (uses_attention(v)) {
    for (int head = 0; head < k; ++head) {
      const std::string p = "att." + std::to_string(head) + ".";
      params_.add(p + "recv", fa, h, fa, rng);
      params_.add(p + "edge", fb, h, fb, rng);
      params_.add(p + "send", fa, h, fa, rng);
      params_.add(p + "a", 3 * h, 1, 3 * h, rng);
    }
  }
  const int self = has_self_node(v) ? fa : 0;
  if (is_undirected(v)) {
    add_mlp("node1", h, h, h, rng);
    add_mlp("node2", self + (v == Variant::AUMP ? k : 1) * h, h, h, rng);
  } else {
    int agg = h;
    if (v == Variant::AMP) agg = k * h;
    if (v == Variant::BMP || v == Variant::BMP_SN || v == Variant::CBMP) agg = 2 * h;
    if (v == Variant::ABMP || v == Variant::ABMP_SN) agg = 2 * k * h;
    add_mlp("node", self + agg, h, h, rng);
  }
  add_mlp("global", h + fg, h, 1, rng);
  params_.add("relevance.w", h, 1, h, rng);
  params_.add("relevance.b", 1, 1, h, rng);
}

std::size_t Model::parameter_count() const {
  return params_.count() - params_.at("relevance.w").value.size() - params_.at("relevance.b").value.size();
}

void Model::add_mlp(const std::string& name, int in, int hidden, int out, std::mt19937_64& rng) {
  params_.add(name + ".l1.w", in, hidden, in, rng);
  params_.add(name + ".l1.b", 1, hidden, in, rng);
  params_.add(name + ".l2.w", hidden, out, hidden, rng);
  params_.add(name + ".l2.b", 1, out, hidden, rng);
}

void Model::add_batch_norm(const std::string& name, int width) {
  params_.add_constant(name + ".gamma", 1, width, 1.0, true);
  params_.add_constant(name + ".beta", 1, width, 0.0, true);
  params_.add_constant(name + ".mean", 1, width, 0.0, false);
  params_.add_constant(name + ".var", 1, width, 1.0, false);
}

Var Model::batch_norm(Tape& t, const std::string& name, const Matrix& input) {
  return tc::batch_norm(t.constant(input), t.param(params_.at(name + ".gamma")), t.param(params_.at(name + ".beta")),
                        params_.at(name + ".mean"), params_.at(name + ".var"));
}

Var Model::mlp(Tape& t, const std::string& name, Var in) {
  Var h = tc::dense(in, t.param(params_.at(name + ".l1.w")), t.param(params_.at(name + ".l1.b")));
  h = tc::dropout(tc::relu(h), spec_.dropout);
  return tc::dense(h, t.param(params_.at(name + ".l2.w")), t.param(params_.at(name + ".l2.b")));
}

Var Model::attention_scores(Tape& t, int head, Var sender, Var edge, Var receiver) {
  const std::string p = "att." + std::to_string(head) + ".";
  Var z = tc::concat_cols({tc::matmul(receiver, t.param(params_.at(p + "recv"))),
                           tc::matmul(edge, t.param(params_.at(p + "edge"))),
                           tc::matmul(sender, t.param(params_.at(p + "send")))});
  return tc::leaky_relu(tc::matmul(z, t.param(params_.at(p + "a"))), spec_.leaky_slope);
}

Model::Output Model::forward(Tape& t, const Batch& b) {
  if (b.x.cols != spec_.atom_features || b.edge_attr.cols != spec_.bond_features ||
      b.u.cols != spec_.global_features) {
    throw InputError("batch feature widths do not match the model");
  }
  const Variant v = spec_.variant;
  const int n = b.n_nodes();
  const int k = spec_.heads;
  Output out;

  Var x = batch_norm(t, "bn.x", b.x);
  Var e = batch_norm(t, "bn.e", b.edge_attr);
  Var u = batch_norm(t, "bn.u", b.u);

  std::vector<int> src = b.src;
  std::vector<int> dst = b.dst;
  if (is_undirected(v)) {
    src.insert(src.end(), b.dst.begin(), b.dst.end());
    dst.insert(dst.end(), b.src.begin(), b.src.end());
    e = tc::gather_rows(e, iota_twice(b.n_edges()));
  }
  Var xs = tc::gather_rows(x, src);
  Var xd = tc::gather_rows(x, dst);
  Var m = mlp(t, "msg", tc::concat_cols({xs, e, xd}));

  std::vector<Var> parts;
  if (has_self_node(v)) parts.push_back(x);
  Var h;
  switch (v) {
    case Variant::MP:
      parts.push_back(tc::segment_max(m, dst, n).value);
      h = mlp(t, "node", tc::concat_cols(parts));
      break;
    case Variant::CBMP: {
      std::vector<int> degree(n, 0);
      for (std::size_t i = 0; i < src.size(); ++i) {
        ++degree[src[i]];
        ++degree[dst[i]];
      }
      std::vector<double> f(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) f[i] = 1.0 / (degree[src[i]] * degree[dst[i]]);
      m = tc::scale_rows(m, f);
      [[fallthrough]];
    }
    case Variant::BMP:
    case Variant::BMP_SN:
      parts.push_back(tc::segment_max(m, dst, n).value);
      parts.push_back(tc::segment_max(m, src, n).value);
      h = mlp(t, "node", tc::concat_cols(parts));
      break;
    case Variant::AMP:
      for (int head = 0; head < k; ++head) {
        Var alpha = tc::segment_softmax(attention_scores(t, head, xs, e, xd), dst, n);
        out.attention.push_back(alpha);
        parts.push_back(tc::segment_max(tc::mul_rows(m, alpha), dst, n).value);
      }
      h = mlp(t, "node", tc::concat_cols(parts));
      break;
    case Variant::ABMP:
    case Variant::ABMP_SN: {
      std::vector<Var> backward_parts;
      for (int head = 0; head < k; ++head) {
        Var fwd = tc::segment_softmax(attention_scores(t, head, xs, e, xd), dst, n);
        Var bwd = tc::segment_softmax(attention_scores(t, head, xd, e, xs), src, n);
        out.attention.push_back(fwd);
        out.attention.push_back(bwd);
        parts.push_back(tc::segment_max(tc::mul_rows(m, fwd), dst, n).value);
        backward_parts.push_back(tc::segment_max(tc::mul_rows(m, bwd), src, n).value);
      }
      parts.insert(parts.end(), backward_parts.begin(), backward_parts.end());
      h = mlp(t, "node", tc::concat_cols(parts));
      break;
    }
    case Variant::UMP: {
      Var inner = mlp(t, "node1", m);
      parts.push_back(tc::segment_mean(inner, dst, n));
      h = mlp(t, "node2", tc::concat_cols(parts));
      break;
    }
    case Variant::AUMP: {
      Var inner = mlp(t, "node1", m);
      for (int head = 0; head < k; ++head) {
        Var alpha = tc::segment_softmax(attention_scores(t, head, xs, e, xd), dst, n);
        out.attention.push_back(alpha);
        parts.push_back(tc::segment_sum(tc::mul_rows(inner, alpha), dst, n));
      }
      h = mlp(t, "node2", tc::concat_cols(parts));
      break;
    }
  }
  out.nodes = h;
  Var pooled = is_undirected(v) ? tc::segment_mean(h, b.node_graph, b.n_graphs)
                                : tc::segment_max(h, b.node_graph, b.n_graphs).value;
  out.prediction = mlp(t, "global", tc::concat_cols({pooled, u}));
  return out;
}

std::vector<double> Model::predict_raw(const Batch& batch) {
  Tape t(false);
  const auto out = forward(t, batch);
  return out.prediction.value().data;
}

std::vector<double> Model::predict(const Batch& batch) {
  auto raw = predict_raw(batch);
  if (spec_.task == Task::Classification) {
    for (double& z : raw) z = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return raw;
}

std::vector<std::vector<double>> Model::node_scores(const Batch& batch) {
  Tape t(false);
  const auto out = forward(t, batch);
  Var s = tc::sigmoid(tc::dense(out.nodes, t.param(params_.at("relevance.w")), t.param(params_.at("relevance.b"))));
  std::vector<std::vector<double>> res;
  for (int g = 0; g < batch.n_graphs; ++g) {
    std::vector<double> raw;
    for (int i = batch.graph_offsets[g]; i < batch.graph_offsets[g + 1]; ++i) raw.push_back(s.value()(i, 0));
    res.push_back(std::move(raw));
  }
  return res;
}

std::vector<std::vector<double>> Model::relevance(const Batch& batch) {
  auto res = node_scores(batch);
  for (auto& mol : res) mol = min_max(mol);
  return res;
}

std::vector<double> min_max(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double a = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(scores.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - a) / range;
  }
  return out;
}

}  // namespace molmp
