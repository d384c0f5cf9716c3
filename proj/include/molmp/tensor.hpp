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
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "molmp/matrix.hpp"

namespace molmp::tc {

class Tape;

/// A learnable (or buffer) array with its gradient and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;
  /// Buffers (batch-norm running statistics) are saved but never optimized.
  bool trainable = true;
};

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  double item() const;
};

/// Records operations for one forward pass and replays them backwards.
/// Single-threaded; use one tape per concurrent computation.
class Tape {
 public:
  explicit Tape(bool training = false, std::uint64_t seed = 0) : training_(training), rng_(seed) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to a parameter; gradients flow into p.grad on backward.
  /// Repeated calls for the same parameter return the same node.
  Var param(Parameter& p);

  /// Reverse sweep from a 1x1 loss; adds into the bound parameters' grads.
  void backward(Var loss);

  bool training() const noexcept { return training_; }
  std::mt19937_64& rng() noexcept { return rng_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Record a node. `back` reads the node's own gradient and accumulates
  /// into its inputs through accumulate().
  Var record(Matrix value, bool requires_grad, std::function<void(const Matrix&)> back);
  /// Add `g` into the gradient of node `id` if it requires one.
  void accumulate(int id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void(const Matrix&)> backward;
  };

  std::vector<Node> nodes_;
  std::map<const Parameter*, int> param_nodes_;
  bool training_;
  std::mt19937_64 rng_;
};

// Dense algebra.
Var matmul(Var a, Var b);
/// x W + b, with b a 1 x O row.
Var dense(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Multiply row r of x (E x F) by w(r, 0) where w is E x 1.
Var mul_rows(Var x, Var w);
/// Multiply row r of x by a constant factor.
Var scale_rows(Var x, std::span<const double> factors);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(Var x, std::span<const int> index);
Var sum(Var a);
Var mean(Var a);

// Activations.
Var relu(Var x);
Var leaky_relu(Var x, double slope);
Var sigmoid(Var x);
/// Inverted dropout using the tape's generator; identity when not training
/// or rate is 0.
Var dropout(Var x, double rate);

/// Batch normalization over rows. In training mode uses batch statistics
/// and updates the running buffers (momentum 0.1, unbiased variance); in
/// evaluation mode uses the running buffers.
Var batch_norm(Var x, Var gamma, Var beta, Parameter& running_mean, Parameter& running_var,
               double eps = 1e-5, double momentum = 0.1);

// Segment reductions over rows. segment ids must lie in [0, n).

struct SegmentMax {
  Var value;
  /// Row chosen per output entry (row-major N x F), -1 for empty segments.
  std::vector<int> argmax;
  std::vector<bool> empty;
};

/// Per-segment columnwise maximum; ties route to the first row, empty
/// segments give 0.
SegmentMax segment_max(Var x, std::span<const int> ids, int n);
Var segment_sum(Var x, std::span<const int> ids, int n);
/// Mean over the rows of each segment; empty segments give 0.
Var segment_mean(Var x, std::span<const int> ids, int n);
/// Columnwise softmax within each segment.
Var segment_softmax(Var scores, std::span<const int> ids, int n);

// Losses (mean reduction over rows; inputs are B x 1).

Var bce_with_logits(Var logits, std::span<const double> targets);
Var mse(Var pred, std::span<const double> targets);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) fill, the usual dense-layer init.
void init_uniform(Matrix& m, int fan_in, std::mt19937_64& rng);

}  // namespace molmp::tc
