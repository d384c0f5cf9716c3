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

#include "molmp/optim.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "molmp/error.hpp"

namespace molmp::tc {

ParameterStore::ParameterStore(const ParameterStore& other) : params_(other.params_), step_(other.step_) {}

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  params_ = other.params_;
  step_ = other.step_;
  return *this;
}

Parameter& ParameterStore::add(const std::string& name, int rows, int cols, int fan_in, std::mt19937_64& rng) {
  Parameter& p = add_constant(name, rows, cols, 0.0, true);
  init_uniform(p.value, fan_in, rng);
  return p;
}

Parameter& ParameterStore::add_constant(const std::string& name, int rows, int cols, double fill, bool trainable) {
  if (contains(name)) throw InvariantError("duplicate parameter " + name);
  Parameter p;
  p.name = name;
  p.value = Matrix(rows, cols, fill);
  p.grad = Matrix(rows, cols);
  p.m = Matrix(rows, cols);
  p.v = Matrix(rows, cols);
  p.trainable = trainable;
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParameterStore::at(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw InvariantError("no parameter named " + std::string(name));
}

const Parameter& ParameterStore::at(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

bool ParameterStore::contains(std::string_view name) const noexcept {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::vector<Parameter*> ParameterStore::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterStore::count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

double ParameterStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) {
    if (!p.trainable) continue;
    for (double g : p.grad.data) s += g * g;
  }
  return std::sqrt(s);
}

double ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm) {
    const double f = max_norm / (norm + 1e-6);
    for (auto& p : params_) {
      if (!p.trainable) continue;
      for (double& g : p.grad.data) g *= f;
    }
  }
  return norm;
}

void ParameterStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& p : params_) {
    if (!p.trainable) continue;
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
      const double g = p.grad.data[i];
      p.m.data[i] = beta1 * p.m.data[i] + (1.0 - beta1) * g;
      p.v.data[i] = beta2 * p.v.data[i] + (1.0 - beta2) * g * g;
      const double mhat = p.m.data[i] / c1;
      const double vhat = p.v.data[i] / c2;
      p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(double lr, double factor, int patience, double min_lr, double threshold)
    : lr_(lr),
      factor_(factor),
      patience_(patience),
      min_lr_(min_lr),
      threshold_(threshold),
      best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::step(double metric) {
  if (metric < best_ * (1.0 - threshold_) || best_ == std::numeric_limits<double>::infinity()) {
    best_ = metric;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ > patience_) {
    lr_ = std::max(min_lr_, lr_ * factor_);
    bad_epochs_ = 0;
  }
  return lr_;
}

nlohmann::json PlateauScheduler::describe() const {
  return {{"factor", factor_}, {"patience", patience_}, {"min_lr", min_lr_}, {"threshold", threshold_}};
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("truncated checkpoint");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const nlohmann::json& meta, const ParameterStore& store) {
  nlohmann::json header;
  header["meta"] = meta;
  header["arrays"] = nlohmann::json::array();
  for (const Parameter* p : store.parameters()) {
    header["arrays"].push_back({{"name", p->name}, {"rows", p->value.rows}, {"cols", p->value.cols},
                                {"trainable", p->trainable}});
  }
  const std::string text = header.dump();
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : store.parameters()) {
    out.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
  }
  if (!out) throw InputError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic.data(), 8) != 0) {
    throw InputError("not a molmp checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw InputError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get<std::uint64_t>(in);
  if (len > (1ULL << 30)) throw InputError("corrupt checkpoint header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw InputError("truncated checkpoint");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("corrupt checkpoint header: ") + e.what());
  }
  Checkpoint ck;
  ck.meta = header.at("meta");
  for (const auto& a : header.at("arrays")) {
    Checkpoint::Array arr;
    arr.name = a.at("name").get<std::string>();
    arr.value = Matrix(a.at("rows").get<int>(), a.at("cols").get<int>());
    arr.trainable = a.at("trainable").get<bool>();
    if (!in.read(reinterpret_cast<char*>(arr.value.data.data()),
                 static_cast<std::streamsize>(arr.value.data.size() * sizeof(double)))) {
      throw InputError("truncated checkpoint data for " + arr.name);
    }
    ck.arrays.push_back(std::move(arr));
  }
  return ck;
}

void load_into(const Checkpoint& ckpt, ParameterStore& store) {
  auto params = store.parameters();
  if (params.size() != ckpt.arrays.size()) throw InputError("checkpoint parameter count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& a = ckpt.arrays[i];
    Parameter& p = *params[i];
    if (a.name != p.name || a.value.rows != p.value.rows || a.value.cols != p.value.cols) {
      throw InputError("checkpoint array " + a.name + " does not match model parameter " + p.name);
    }
    p.value = a.value;
  }
}

}  // namespace molmp::tc
