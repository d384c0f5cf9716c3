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

#include "molmp/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "molmp/error.hpp"

namespace molmp::tc {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Matrix& m) { return {m.data.data(), m.rows, m.cols}; }
Eigen::Map<RowMajor> view(Matrix& m) { return {m.data.data(), m.rows, m.cols}; }

void require(bool ok, const char* what) {
  if (!ok) throw InvariantError(what);
}

Tape& tape_of(Var v) {
  require(v.tape != nullptr && v.id >= 0, "use of an unbound Var");
  return *v.tape;
}

Tape& same_tape(Var a, Var b) {
  require(a.tape == b.tape, "operands recorded on different tapes");
  return tape_of(a);
}

bool needs(Var v) { return v.tape->requires_grad(v.id); }

void check_ids(std::span<const int> ids, int rows, int n) {
  require(static_cast<int>(ids.size()) == rows, "segment id count differs from row count");
  for (int s : ids) {
    if (s < 0 || s >= n) throw InvariantError("segment id out of range");
  }
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

double Var::item() const {
  const Matrix& v = value();
  require(v.rows == 1 && v.cols == 1, "item() on a non-scalar");
  return v.data[0];
}

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Var v = record(p.value, p.trainable, nullptr);
  nodes_[v.id].param = p.trainable ? &p : nullptr;
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Tape::record(Matrix value, bool requires_grad, std::function<void(const Matrix&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  require(g.rows == n.value.rows && g.cols == n.value.cols, "gradient shape mismatch");
  if (n.grad.rows != g.rows || n.grad.cols != g.cols) {
    n.grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

void Tape::backward(Var loss) {
  require(loss.tape == this, "loss recorded on a different tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows != 1 || lv.cols != 1) throw InvariantError("backward requires a scalar loss");
  if (!nodes_[loss.id].requires_grad) return;
  for (auto& n : nodes_) n.grad = Matrix();
  nodes_[loss.id].grad = Matrix(1, 1, 1.0);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.rows != n.value.rows || n.grad.cols != n.value.cols) continue;
    if (n.value.size() != 0 && n.grad.size() == 0) continue;
    if (n.backward) {
      const Matrix g = n.grad;
      n.backward(g);
    }
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr || n.grad.rows != n.value.rows || n.grad.cols != n.value.cols) continue;
    Parameter& p = *n.param;
    if (p.grad.rows != p.value.rows || p.grad.cols != p.value.cols) p.grad = Matrix(p.value.rows, p.value.cols);
    for (std::size_t k = 0; k < p.grad.data.size(); ++k) p.grad.data[k] += n.grad.data[k];
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.cols == B.rows, "matmul shape mismatch");
  Matrix out(A.rows, B.cols);
  view(out).noalias() = view(A) * view(B);
  return t.record(std::move(out), needs(a) || needs(b), [a, b](const Matrix& g) {
    Tape& tp = *a.tape;
    if (needs(a)) {
      Matrix ga(a.rows(), a.cols());
      view(ga).noalias() = view(g) * view(b.value()).transpose();
      tp.accumulate(a.id, ga);
    }
    if (needs(b)) {
      Matrix gb(b.rows(), b.cols());
      view(gb).noalias() = view(a.value()).transpose() * view(g);
      tp.accumulate(b.id, gb);
    }
  });
}

Var dense(Var x, Var w, Var b) {
  Tape& t = same_tape(x, w);
  same_tape(x, b);
  const Matrix& X = x.value();
  const Matrix& W = w.value();
  const Matrix& B = b.value();
  require(X.cols == W.rows, "dense: input width does not match weight rows");
  require(B.rows == 1 && B.cols == W.cols, "dense: bias shape mismatch");
  Matrix out(X.rows, W.cols);
  view(out).noalias() = view(X) * view(W);
  view(out).rowwise() += view(B).row(0);
  return t.record(std::move(out), needs(x) || needs(w) || needs(b), [x, w, b](const Matrix& g) {
    Tape& tp = *x.tape;
    if (needs(x)) {
      Matrix gx(x.rows(), x.cols());
      view(gx).noalias() = view(g) * view(w.value()).transpose();
      tp.accumulate(x.id, gx);
    }
    if (needs(w)) {
      Matrix gw(w.rows(), w.cols());
      view(gw).noalias() = view(x.value()).transpose() * view(g);
      tp.accumulate(w.id, gw);
    }
    if (needs(b)) {
      Matrix gb(1, b.cols());
      view(gb).row(0) = view(g).colwise().sum();
      tp.accumulate(b.id, gb);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.value().data[i];
  return t.record(std::move(out), needs(a) || needs(b), [a, b](const Matrix& g) {
    a.tape->accumulate(a.id, g);
    a.tape->accumulate(b.id, g);
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul shape mismatch");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.value().data[i];
  return t.record(std::move(out), needs(a) || needs(b), [a, b](const Matrix& g) {
    Matrix ga = g;
    Matrix gb = g;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] *= b.value().data[i];
      gb.data[i] *= a.value().data[i];
    }
    a.tape->accumulate(a.id, ga);
    a.tape->accumulate(b.id, gb);
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.data) v *= s;
  return t.record(std::move(out), needs(a), [a, s](const Matrix& g) {
    Matrix ga = g;
    for (double& v : ga.data) v *= s;
    a.tape->accumulate(a.id, ga);
  });
}

Var mul_rows(Var x, Var w) {
  Tape& t = same_tape(x, w);
  require(w.cols() == 1 && w.rows() == x.rows(), "mul_rows: weight must be rows x 1");
  Matrix out = x.value();
  for (int r = 0; r < out.rows; ++r) {
    const double f = w.value()(r, 0);
    for (int c = 0; c < out.cols; ++c) out(r, c) *= f;
  }
  return t.record(std::move(out), needs(x) || needs(w), [x, w](const Matrix& g) {
    const Matrix& X = x.value();
    const Matrix& W = w.value();
    if (needs(x)) {
      Matrix gx = g;
      for (int r = 0; r < gx.rows; ++r) {
        for (int c = 0; c < gx.cols; ++c) gx(r, c) *= W(r, 0);
      }
      x.tape->accumulate(x.id, gx);
    }
    if (needs(w)) {
      Matrix gw(W.rows, 1);
      for (int r = 0; r < X.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < X.cols; ++c) s += g(r, c) * X(r, c);
        gw(r, 0) = s;
      }
      x.tape->accumulate(w.id, gw);
    }
  });
}

Var scale_rows(Var x, std::span<const double> factors) {
  Tape& t = tape_of(x);
  require(static_cast<int>(factors.size()) == x.rows(), "scale_rows: factor count mismatch");
  std::vector<double> f(factors.begin(), factors.end());
  Matrix out = x.value();
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) out(r, c) *= f[r];
  }
  return t.record(std::move(out), needs(x), [x, f = std::move(f)](const Matrix& g) {
    Matrix gx = g;
    for (int r = 0; r < gx.rows; ++r) {
      for (int c = 0; c < gx.cols; ++c) gx(r, c) *= f[r];
    }
    x.tape->accumulate(x.id, gx);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat of nothing");
  Tape& t = tape_of(parts[0]);
  const int rows = parts[0].rows();
  int cols = 0;
  bool grad = false;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    require(p.rows() == rows, "concat row mismatch");
    cols += p.cols();
    grad = grad || needs(p);
  }
  Matrix out(rows, cols);
  int offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (int r = 0; r < rows; ++r) std::copy(v.row(r), v.row(r) + v.cols, out.row(r) + offset);
    offset += v.cols;
  }
  return t.record(std::move(out), grad, [parts](const Matrix& g) {
    int off = 0;
    for (const Var& p : parts) {
      if (needs(p)) {
        Matrix gp(p.rows(), p.cols());
        for (int r = 0; r < gp.rows; ++r) std::copy(g.row(r) + off, g.row(r) + off + gp.cols, gp.row(r));
        p.tape->accumulate(p.id, gp);
      }
      off += p.cols();
    }
  });
}

Var gather_rows(Var x, std::span<const int> index) {
  Tape& t = tape_of(x);
  const Matrix& X = x.value();
  std::vector<int> idx(index.begin(), index.end());
  Matrix out(static_cast<int>(idx.size()), X.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= X.rows) throw InvariantError("gather index out of range");
    std::copy(X.row(idx[r]), X.row(idx[r]) + X.cols, out.row(static_cast<int>(r)));
  }
  return t.record(std::move(out), needs(x), [x, idx = std::move(idx)](const Matrix& g) {
    Matrix gx(x.rows(), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const double* src = g.row(static_cast<int>(r));
      double* dst = gx.row(idx[r]);
      for (int c = 0; c < gx.cols; ++c) dst[c] += src[c];
    }
    x.tape->accumulate(x.id, gx);
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data) s += v;
  return t.record(Matrix(1, 1, s), needs(a), [a](const Matrix& g) {
    a.tape->accumulate(a.id, Matrix(a.rows(), a.cols(), g.data[0]));
  });
}

Var mean(Var a) {
  const auto n = a.value().size();
  require(n > 0, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var relu(Var x) { return leaky_relu(x, 0.0); }

Var leaky_relu(Var x, double slope) {
  Tape& t = tape_of(x);
  Matrix out = x.value();
  for (double& v : out.data) v = v > 0.0 ? v : slope * v;
  return t.record(std::move(out), needs(x), [x, slope](const Matrix& g) {
    Matrix gx = g;
    const auto& X = x.value().data;
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= X[i] > 0.0 ? 1.0 : slope;
    x.tape->accumulate(x.id, gx);
  });
}

Var sigmoid(Var x) {
  Tape& t = tape_of(x);
  Matrix out = x.value();
  for (double& v : out.data) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), needs(x), [x, id](const Matrix& g) {
    const auto& y = x.tape->value(id).data;
    Matrix gx = g;
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= y[i] * (1.0 - y[i]);
    x.tape->accumulate(x.id, gx);
  });
}

Var dropout(Var x, double rate) {
  Tape& t = tape_of(x);
  require(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0, 1)");
  if (!t.training() || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = keep(t.rng()) ? s : 0.0;
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask[i];
  return t.record(std::move(out), needs(x), [x, mask = std::move(mask)](const Matrix& g) {
    Matrix gx = g;
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= mask[i];
    x.tape->accumulate(x.id, gx);
  });
}

Var batch_norm(Var x, Var gamma, Var beta, Parameter& running_mean, Parameter& running_var, double eps,
               double momentum) {
  Tape& t = same_tape(x, gamma);
  same_tape(x, beta);
  const Matrix& X = x.value();
  const int n = X.rows;
  const int f = X.cols;
  require(gamma.rows() == 1 && gamma.cols() == f && beta.rows() == 1 && beta.cols() == f,
          "batch_norm affine shape mismatch");
  require(running_mean.value.cols == f && running_var.value.cols == f, "batch_norm buffer shape mismatch");

  std::vector<double> mu(f), inv_std(f);
  if (t.training() && n > 0) {
    for (int c = 0; c < f; ++c) {
      double s = 0.0;
      for (int r = 0; r < n; ++r) s += X(r, c);
      mu[c] = s / n;
      double ss = 0.0;
      for (int r = 0; r < n; ++r) ss += (X(r, c) - mu[c]) * (X(r, c) - mu[c]);
      const double var = ss / n;
      inv_std[c] = 1.0 / std::sqrt(var + eps);
      const double unbiased = n > 1 ? ss / (n - 1) : var;
      running_mean.value(0, c) = (1.0 - momentum) * running_mean.value(0, c) + momentum * mu[c];
      running_var.value(0, c) = (1.0 - momentum) * running_var.value(0, c) + momentum * unbiased;
    }
  } else {
    for (int c = 0; c < f; ++c) {
      mu[c] = running_mean.value(0, c);
      inv_std[c] = 1.0 / std::sqrt(running_var.value(0, c) + eps);
    }
  }
  Matrix xhat(n, f);
  Matrix out(n, f);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < f; ++c) {
      xhat(r, c) = (X(r, c) - mu[c]) * inv_std[c];
      out(r, c) = gamma.value()(0, c) * xhat(r, c) + beta.value()(0, c);
    }
  }
  const bool batch_stats = t.training() && n > 0;
  return t.record(std::move(out), needs(x) || needs(gamma) || needs(beta),
                  [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), batch_stats](const Matrix& g) {
                    Tape& tp = *x.tape;
                    const int rows = g.rows;
                    const int cols = g.cols;
                    Matrix gg(1, cols), gb(1, cols);
                    for (int r = 0; r < rows; ++r) {
                      for (int c = 0; c < cols; ++c) {
                        gg(0, c) += g(r, c) * xhat(r, c);
                        gb(0, c) += g(r, c);
                      }
                    }
                    if (needs(x)) {
                      Matrix gx(rows, cols);
                      for (int c = 0; c < cols; ++c) {
                        const double gm = gamma.value()(0, c);
                        if (batch_stats) {
                          // d xhat summed terms
                          double s1 = 0.0, s2 = 0.0;
                          for (int r = 0; r < rows; ++r) {
                            s1 += g(r, c) * gm;
                            s2 += g(r, c) * gm * xhat(r, c);
                          }
                          for (int r = 0; r < rows; ++r) {
                            gx(r, c) = inv_std[c] / rows * (rows * g(r, c) * gm - s1 - xhat(r, c) * s2);
                          }
                        } else {
                          for (int r = 0; r < rows; ++r) gx(r, c) = g(r, c) * gm * inv_std[c];
                        }
                      }
                      tp.accumulate(x.id, gx);
                    }
                    tp.accumulate(gamma.id, gg);
                    tp.accumulate(beta.id, gb);
                  });
}

SegmentMax segment_max(Var x, std::span<const int> ids, int n) {
  Tape& t = tape_of(x);
  const Matrix& X = x.value();
  check_ids(ids, X.rows, n);
  const int f = X.cols;
  SegmentMax res;
  res.argmax.assign(static_cast<std::size_t>(n) * f, -1);
  res.empty.assign(n, true);
  Matrix out(n, f);
  for (int r = 0; r < X.rows; ++r) {
    const int s = ids[r];
    res.empty[s] = false;
    for (int c = 0; c < f; ++c) {
      int& best = res.argmax[static_cast<std::size_t>(s) * f + c];
      if (best < 0 || X(r, c) > X(best, c)) best = r;
    }
  }
  for (int s = 0; s < n; ++s) {
    for (int c = 0; c < f; ++c) {
      const int best = res.argmax[static_cast<std::size_t>(s) * f + c];
      out(s, c) = best < 0 ? 0.0 : X(best, c);
    }
  }
  res.value = t.record(std::move(out), needs(x), [x, arg = res.argmax, f](const Matrix& g) {
    Matrix gx(x.rows(), x.cols());
    for (int s = 0; s < g.rows; ++s) {
      for (int c = 0; c < f; ++c) {
        const int r = arg[static_cast<std::size_t>(s) * f + c];
        if (r >= 0) gx(r, c) += g(s, c);
      }
    }
    x.tape->accumulate(x.id, gx);
  });
  return res;
}

Var segment_sum(Var x, std::span<const int> ids, int n) {
  Tape& t = tape_of(x);
  const Matrix& X = x.value();
  check_ids(ids, X.rows, n);
  std::vector<int> seg(ids.begin(), ids.end());
  Matrix out(n, X.cols);
  for (int r = 0; r < X.rows; ++r) {
    for (int c = 0; c < X.cols; ++c) out(seg[r], c) += X(r, c);
  }
  return t.record(std::move(out), needs(x), [x, seg = std::move(seg)](const Matrix& g) {
    Matrix gx(x.rows(), x.cols());
    for (int r = 0; r < gx.rows; ++r) std::copy(g.row(seg[r]), g.row(seg[r]) + gx.cols, gx.row(r));
    x.tape->accumulate(x.id, gx);
  });
}

Var segment_mean(Var x, std::span<const int> ids, int n) {
  check_ids(ids, x.rows(), n);
  std::vector<int> count(n, 0);
  for (int s : ids) ++count[s];
  std::vector<double> inv(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) inv[r] = 1.0 / count[ids[r]];
  return segment_sum(scale_rows(x, inv), ids, n);
}

Var segment_softmax(Var scores, std::span<const int> ids, int n) {
  Tape& t = tape_of(scores);
  const Matrix& S = scores.value();
  check_ids(ids, S.rows, n);
  const int f = S.cols;
  std::vector<int> seg(ids.begin(), ids.end());
  Matrix hi(n, f, -std::numeric_limits<double>::infinity());
  for (int r = 0; r < S.rows; ++r) {
    for (int c = 0; c < f; ++c) hi(seg[r], c) = std::max(hi(seg[r], c), S(r, c));
  }
  Matrix out(S.rows, f);
  Matrix denom(n, f);
  for (int r = 0; r < S.rows; ++r) {
    for (int c = 0; c < f; ++c) {
      out(r, c) = std::exp(S(r, c) - hi(seg[r], c));
      denom(seg[r], c) += out(r, c);
    }
  }
  for (int r = 0; r < S.rows; ++r) {
    for (int c = 0; c < f; ++c) out(r, c) /= denom(seg[r], c);
  }
  const int id = static_cast<int>(t.size());
  return t.record(std::move(out), needs(scores), [scores, id, seg = std::move(seg), n](const Matrix& g) {
    const Matrix& y = scores.tape->value(id);
    Matrix dot(n, y.cols);
    for (int r = 0; r < y.rows; ++r) {
      for (int c = 0; c < y.cols; ++c) dot(seg[r], c) += g(r, c) * y(r, c);
    }
    Matrix gs(y.rows, y.cols);
    for (int r = 0; r < y.rows; ++r) {
      for (int c = 0; c < y.cols; ++c) gs(r, c) = y(r, c) * (g(r, c) - dot(seg[r], c));
    }
    scores.tape->accumulate(scores.id, gs);
  });
}

Var bce_with_logits(Var logits, std::span<const double> targets) {
  Tape& t = tape_of(logits);
  const Matrix& Z = logits.value();
  require(Z.cols == 1 && Z.rows == static_cast<int>(targets.size()) && Z.rows > 0, "bce_with_logits shape mismatch");
  std::vector<double> y(targets.begin(), targets.end());
  double loss = 0.0;
  for (int r = 0; r < Z.rows; ++r) {
    const double z = Z(r, 0);
    loss += std::max(z, 0.0) - z * y[r] + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= Z.rows;
  return t.record(Matrix(1, 1, loss), needs(logits), [logits, y = std::move(y)](const Matrix& g) {
    const Matrix& Zv = logits.value();
    Matrix gz(Zv.rows, 1);
    for (int r = 0; r < Zv.rows; ++r) {
      const double z = Zv(r, 0);
      const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      gz(r, 0) = g.data[0] * (p - y[r]) / Zv.rows;
    }
    logits.tape->accumulate(logits.id, gz);
  });
}

Var mse(Var pred, std::span<const double> targets) {
  Tape& t = tape_of(pred);
  const Matrix& P = pred.value();
  require(P.cols == 1 && P.rows == static_cast<int>(targets.size()) && P.rows > 0, "mse shape mismatch");
  std::vector<double> y(targets.begin(), targets.end());
  double loss = 0.0;
  for (int r = 0; r < P.rows; ++r) loss += (P(r, 0) - y[r]) * (P(r, 0) - y[r]);
  loss /= P.rows;
  return t.record(Matrix(1, 1, loss), needs(pred), [pred, y = std::move(y)](const Matrix& g) {
    const Matrix& Pv = pred.value();
    Matrix gp(Pv.rows, 1);
    for (int r = 0; r < Pv.rows; ++r) gp(r, 0) = g.data[0] * 2.0 * (Pv(r, 0) - y[r]) / Pv.rows;
    pred.tape->accumulate(pred.id, gp);
  });
}

void init_uniform(Matrix& m, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : m.data) v = u(rng);
}

}  // namespace molmp::tc
