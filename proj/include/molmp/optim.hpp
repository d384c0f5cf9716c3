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
#include <deque>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "molmp/tensor.hpp"

namespace molmp::tc {

/// Insertion-ordered named parameters with Adam state.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);

  /// New trainable rows x cols parameter initialized uniformly with bound
  /// 1/sqrt(fan_in).
  Parameter& add(const std::string& name, int rows, int cols, int fan_in, std::mt19937_64& rng);
  /// New parameter filled with a constant (batch-norm scale, shift and
  /// running statistics).
  Parameter& add_constant(const std::string& name, int rows, int cols, double fill, bool trainable);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  /// Number of trainable scalars.
  std::size_t count() const noexcept;

  void zero_grad();
  /// Global 2-norm over trainable gradients.
  double grad_norm() const;
  /// Rescale gradients so their global norm is at most max_norm. Returns
  /// the norm before clipping.
  double clip_grad_norm(double max_norm);
  /// Adam with bias correction.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  std::int64_t step() const noexcept { return step_; }

 private:
  std::deque<Parameter> params_;
  std::int64_t step_ = 0;
};

/// Reduce-on-plateau learning-rate schedule for a metric to be minimized.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(double lr, double factor = 0.5, int patience = 5, double min_lr = 1e-5,
                            double threshold = 1e-4);
  /// Report one epoch's metric; returns the learning rate to use next.
  double step(double metric);
  double lr() const noexcept { return lr_; }
  nlohmann::json describe() const;

 private:
  double lr_;
  double factor_;
  int patience_;
  double min_lr_;
  double threshold_;
  double best_;
  int bad_epochs_ = 0;
};

inline constexpr std::string_view kCheckpointMagic = "MOLMPCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic, u32 version, u64 header length, JSON header
/// (caller metadata plus array directory), then little-endian float64 data
/// for every parameter in store order.
void write_checkpoint(std::ostream& out, const nlohmann::json& meta, const ParameterStore& store);

struct Checkpoint {
  nlohmann::json meta;
  struct Array {
    std::string name;
    Matrix value;
    bool trainable = true;
  };
  std::vector<Array> arrays;
};

Checkpoint read_checkpoint(std::istream& in);

/// Copy checkpoint arrays into a store with the same layout; throws
/// InputError on a name or shape mismatch.
void load_into(const Checkpoint& ckpt, ParameterStore& store);

}  // namespace molmp::tc
