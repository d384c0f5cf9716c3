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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "molmp/featurizer.hpp"
#include "molmp/optim.hpp"
#include "molmp/tensor.hpp"

namespace molmp {

enum class Variant { MP, AMP, UMP, AUMP, BMP, BMP_SN, CBMP, ABMP, ABMP_SN };
enum class Task { Classification, Regression };

inline constexpr Variant kAllVariants[] = {Variant::MP,   Variant::AMP,    Variant::UMP,
                                           Variant::AUMP, Variant::BMP,    Variant::BMP_SN,
                                           Variant::CBMP, Variant::ABMP,   Variant::ABMP_SN};

std::string_view to_string(Variant v) noexcept;
/// Accepts the canonical names ("BMP_SN") and the "BMP+SN" spelling.
Variant parse_variant(std::string_view name);
std::string_view to_string(Task t) noexcept;
Task parse_task(std::string_view name);

bool uses_attention(Variant v) noexcept;
/// UMP and AUMP work on the mirrored edge set with mean pooling.
bool is_undirected(Variant v) noexcept;
bool is_bidirectional(Variant v) noexcept;
bool has_self_node(Variant v) noexcept;

struct ModelSpec {
  Variant variant = Variant::BMP;
  Task task = Task::Classification;
  int hidden = 250;
  double dropout = 0.0;
  int heads = 1;
  double leaky_slope = 0.2;
  int atom_features = 6;
  int bond_features = 4;
  int global_features = 6;

  /// Throws InputError when a field is out of range.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

/// Several featurized graphs stacked into one disjoint graph.
struct Batch {
  Matrix x;
  Matrix edge_attr;
  Matrix u;
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> node_graph;
  std::vector<int> edge_graph;
  std::vector<int> graph_offsets;  // first node of each graph, plus total
  std::vector<double> labels;      // empty when any graph lacks a label
  int n_graphs = 0;

  int n_nodes() const noexcept { return x.rows; }
  int n_edges() const noexcept { return static_cast<int>(src.size()); }
};

Batch make_batch(const std::vector<const FeaturizedGraph*>& graphs);
Batch make_batch(const std::vector<FeaturizedGraph>& graphs);

class Model {
 public:
  Model(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const noexcept { return spec_; }
  tc::ParameterStore& params() noexcept { return params_; }
  const tc::ParameterStore& params() const noexcept { return params_; }
  /// Trainable scalars, excluding the relevance projection.
  std::size_t parameter_count() const;

  struct Output {
    tc::Var prediction;  // n_graphs x 1 logits or values
    tc::Var nodes;       // node-block embeddings before pooling
    /// Attention coefficients per direction (E x heads); empty otherwise.
    std::vector<tc::Var> attention;
  };

  /// Record one forward pass. Training behaviour (dropout, batch
  /// statistics) follows tape.training().
  Output forward(tc::Tape& tape, const Batch& batch);

  /// Evaluation-mode outputs: probabilities for classification, values for
  /// regression.
  std::vector<double> predict(const Batch& batch);
  std::vector<double> predict_raw(const Batch& batch);

  /// Per-graph raw node scores: linear projection of the node embeddings
  /// followed by a sigmoid.
  std::vector<std::vector<double>> node_scores(const Batch& batch);
  /// node_scores min-max scaled within each molecule (0.5 when constant).
  std::vector<std::vector<double>> relevance(const Batch& batch);

 private:
  tc::Var mlp(tc::Tape& t, const std::string& name, tc::Var in);
  tc::Var attention_scores(tc::Tape& t, int head, tc::Var sender, tc::Var edge, tc::Var receiver);
  void add_mlp(const std::string& name, int in, int hidden, int out, std::mt19937_64& rng);
  void add_batch_norm(const std::string& name, int width);
  tc::Var batch_norm(tc::Tape& t, const std::string& name, const Matrix& input);

  ModelSpec spec_;
  tc::ParameterStore params_;
};

/// Min-max scaling of one molecule's scores; constant input maps to 0.5.
std::vector<double> min_max(const std::vector<double>& scores);

}  // namespace molmp
