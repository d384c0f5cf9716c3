#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "molmp/error.hpp"
#include "molmp/optim.hpp"

using namespace molmp;
using namespace molmp::tc;

namespace {

Parameter random_param(const char* name, int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  Parameter p;
  p.name = name;
  p.value = Matrix(r, c);
  std::normal_distribution<double> g(0.0, scale);
  for (double& v : p.value.data) v = g(rng);
  p.grad = Matrix(r, c);
  return p;
}

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  Matrix m(r, c);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : m.data) v = g(rng);
  return m;
}

// Project an op output onto a fixed random direction so every entry
// contributes to the scalar.
Var project(Var out, const Matrix& dir) { return sum(mul(out, out.tape->constant(dir))); }

void check_op(const std::vector<Parameter*>& ps, int out_rows, int out_cols,
              const std::function<Var(Tape&)>& op, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix dir = random_matrix(out_rows, out_cols, rng);
  const auto res = testing::gradient_check(ps, [&](Tape& t) { return project(op(t), dir); }, 1e-6);
  CHECK(res.passed == res.checked);
  CHECK(res.worst < 1e-6);
}

}  // namespace

TEST_CASE("tensor examples") {
  Tape t(false);
  Parameter x;
  x.name = "x";
  x.value = Matrix(1, 1, 3.0);
  const Var xv = t.param(x);
  t.backward(mul(xv, xv));
  CHECK(x.grad(0, 0) == 6.0);

  Tape t2(false);
  const auto X = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  Matrix I(3, 3);
  for (int i = 0; i < 3; ++i) I(i, i) = 1.0;
  CHECK(dense(t2.constant(X), t2.constant(I), t2.constant(Matrix(1, 3))).value() == X);

  Tape t3(true, 1);
  const Var xc = t3.constant(X);
  CHECK(dropout(xc, 0.0).value() == X);
  Tape t4(false, 1);
  CHECK(dropout(t4.constant(X), 0.5).value() == X);

  Parameter rm, rv;
  rm.value = Matrix(1, 2);
  rv.value = Matrix(1, 2, 1.0);
  Tape t5(true);
  const auto constant = Matrix::from_rows({{7, 1}, {7, 2}, {7, 3}});
  const auto bn = batch_norm(t5.constant(constant), t5.constant(Matrix(1, 2, 1.0)), t5.constant(Matrix(1, 2)), rm, rv);
  for (int r = 0; r < 3; ++r) CHECK(bn.value()(r, 0) == 0.0);
  CHECK(rm.value(0, 0) == doctest::Approx(0.7));
  CHECK(rv.value(0, 1) == doctest::Approx(0.9 + 0.1 * 1.0));

  CHECK_THROWS_AS(t5.backward(t5.constant(X)), InvariantError);
  CHECK_THROWS_AS(matmul(t5.constant(X), t5.constant(X)), InvariantError);
}

TEST_CASE("dropout keeps the expected fraction and scales survivors") {
  Tape t(true, 42);
  const Var x = t.constant(Matrix(200, 100, 1.0));
  const Var y = dropout(x, 0.25);
  int kept = 0;
  for (double v : y.value().data) {
    if (v != 0.0) {
      CHECK(v == doctest::Approx(1.0 / 0.75));
      ++kept;
    }
  }
  CHECK(std::abs(kept / 20000.0 - 0.75) < 0.02);
}

TEST_CASE("segment reductions: examples and brute force") {
  Tape t(false);
  const auto rows = Matrix::from_rows({{1, 5}, {3, 2}});
  const std::vector<int> both{0, 0};
  CHECK(segment_max(t.constant(rows), both, 1).value.value() == Matrix::from_rows({{3, 5}}));
  const std::vector<int> own{0, 1};
  CHECK(segment_max(t.constant(rows), own, 2).value.value() == rows);
  const std::vector<int> skip{0, 2};
  const auto sm = segment_max(t.constant(rows), skip, 3);
  CHECK(sm.empty == std::vector<bool>{false, true, false});
  CHECK(sm.value.value()(1, 0) == 0.0);
  CHECK(sm.value.value()(1, 1) == 0.0);
  CHECK(segment_mean(t.constant(Matrix::from_rows({{2}, {4}})), both, 1).value()(0, 0) == 3.0);
  CHECK_THROWS_AS(segment_max(t.constant(rows), std::vector<int>{0, 5}, 2), InvariantError);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int e = 1 + static_cast<int>(rng() % 20);
    const int n = 1 + static_cast<int>(rng() % 6);
    const Matrix x = random_matrix(e, 3, rng);
    std::vector<int> ids(e);
    for (int& s : ids) s = static_cast<int>(rng() % n);
    const auto mx = segment_max(t.constant(x), ids, n).value.value();
    const auto mn = segment_mean(t.constant(x), ids, n).value();
    const auto sf = segment_softmax(t.constant(x), ids, n).value();
    for (int s = 0; s < n; ++s) {
      for (int c = 0; c < 3; ++c) {
        double best = -1e300, total = 0.0, z = 0.0;
        int count = 0;
        for (int r = 0; r < e; ++r) {
          if (ids[r] != s) continue;
          best = std::max(best, x(r, c));
          total += x(r, c);
          z += std::exp(x(r, c));
          ++count;
        }
        CHECK(mx(s, c) == (count == 0 ? 0.0 : best));
        if (count > 0) CHECK(mn(s, c) == doctest::Approx(total / count).epsilon(1e-14));
        double sum_soft = 0.0;
        for (int r = 0; r < e; ++r) {
          if (ids[r] != s) continue;
          CHECK(std::abs(sf(r, c) - std::exp(x(r, c)) / z) < 1e-12);
          CHECK(sf(r, c) >= 0.0);
          sum_soft += sf(r, c);
        }
        if (count > 0) CHECK(std::abs(sum_soft - 1.0) < 1e-9);
      }
    }
  }
  const auto one = segment_softmax(t.constant(Matrix::from_rows({{4.0}})), std::vector<int>{0}, 1).value();
  CHECK(one(0, 0) == 1.0);
  const auto pair = segment_softmax(t.constant(Matrix::from_rows({{2.0}, {2.0}})), both, 1).value();
  CHECK(pair(0, 0) == 0.5);
  CHECK(pair(1, 0) == 0.5);
}

TEST_CASE("segment_max routes ties to the first row") {
  Tape t(false);
  Parameter x;
  x.name = "x";
  x.value = Matrix::from_rows({{2.0}, {2.0}, {1.0}});
  const std::vector<int> ids{0, 0, 0};
  t.backward(sum(segment_max(t.param(x), ids, 1).value));
  CHECK(x.grad(0, 0) == 1.0);
  CHECK(x.grad(1, 0) == 0.0);
  CHECK(x.grad(2, 0) == 0.0);
}

TEST_CASE("losses") {
  Tape t(false);
  const std::vector<double> half{0.5};
  CHECK(bce_with_logits(t.constant(Matrix(1, 1, 0.0)), half).item() == doctest::Approx(std::log(2.0)));
  const std::vector<double> one{1.0};
  const double big = bce_with_logits(t.constant(Matrix(1, 1, 800.0)), one).item();
  CHECK(std::isfinite(big));
  CHECK(big < 1e-12);
  const std::vector<double> zero{0.0};
  CHECK(bce_with_logits(t.constant(Matrix(1, 1, -800.0)), zero).item() < 1e-12);
  CHECK(bce_with_logits(t.constant(Matrix(1, 1, 800.0)), zero).item() == doctest::Approx(800.0));
  const std::vector<double> y{1.0, 2.0, 3.0};
  CHECK(mse(t.constant(Matrix::from_rows({{1}, {2}, {3}})), y).item() == 0.0);
  CHECK(mse(t.constant(Matrix::from_rows({{2}, {2}, {3}})), y).item() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("every op matches central finite differences") {
  std::mt19937_64 rng(2024);
  auto a = random_param("a", 4, 3, rng);
  auto b = random_param("b", 3, 5, rng);
  auto bias = random_param("bias", 1, 5, rng);
  auto c = random_param("c", 4, 3, rng);
  auto w = random_param("w", 4, 1, rng);
  const std::vector<int> ids{0, 2, 0, 1};
  const std::vector<double> factors{0.5, 2.0, -1.0, 0.25};
  const std::vector<int> gather{3, 0, 0, 2, 1};

  check_op({&a, &b}, 4, 5, [&](Tape& t) { return matmul(t.param(a), t.param(b)); }, 1);
  check_op({&a, &b, &bias}, 4, 5, [&](Tape& t) { return dense(t.param(a), t.param(b), t.param(bias)); }, 2);
  check_op({&a, &c}, 4, 3, [&](Tape& t) { return add(t.param(a), t.param(c)); }, 3);
  check_op({&a, &c}, 4, 3, [&](Tape& t) { return sub(t.param(a), t.param(c)); }, 4);
  check_op({&a, &c}, 4, 3, [&](Tape& t) { return mul(t.param(a), t.param(c)); }, 5);
  check_op({&a}, 4, 3, [&](Tape& t) { return scale(t.param(a), -1.7); }, 6);
  check_op({&a, &w}, 4, 3, [&](Tape& t) { return mul_rows(t.param(a), t.param(w)); }, 7);
  check_op({&a}, 4, 3, [&](Tape& t) { return scale_rows(t.param(a), factors); }, 8);
  check_op({&a, &c}, 4, 6, [&](Tape& t) { return concat_cols({t.param(a), t.param(c)}); }, 9);
  check_op({&a}, 5, 3, [&](Tape& t) { return gather_rows(t.param(a), gather); }, 10);
  check_op({&a}, 1, 1, [&](Tape& t) { return sum(t.param(a)); }, 11);
  check_op({&a}, 1, 1, [&](Tape& t) { return mean(t.param(a)); }, 12);
  check_op({&a}, 4, 3, [&](Tape& t) { return relu(t.param(a)); }, 13);
  check_op({&a}, 4, 3, [&](Tape& t) { return leaky_relu(t.param(a), 0.2); }, 14);
  check_op({&a}, 4, 3, [&](Tape& t) { return sigmoid(t.param(a)); }, 15);
  check_op({&a}, 3, 3, [&](Tape& t) { return segment_max(t.param(a), ids, 3).value; }, 16);
  check_op({&a}, 3, 3, [&](Tape& t) { return segment_sum(t.param(a), ids, 3); }, 17);
  check_op({&a}, 3, 3, [&](Tape& t) { return segment_mean(t.param(a), ids, 3); }, 18);
  check_op({&a}, 4, 3, [&](Tape& t) { return segment_softmax(t.param(a), ids, 3); }, 19);

  auto gamma = random_param("gamma", 1, 3, rng);
  auto beta = random_param("beta", 1, 3, rng);
  Parameter rm, rv;
  rm.value = Matrix(1, 3);
  rv.value = Matrix(1, 3, 1.0);
  check_op({&a, &gamma, &beta}, 4, 3,
           [&](Tape& t) { return batch_norm(t.param(a), t.param(gamma), t.param(beta), rm, rv); }, 20);

  auto logits = random_param("z", 6, 1, rng, 2.0);
  const std::vector<double> targets{0, 1, 1, 0, 0.3, 1};
  check_op({&logits}, 1, 1, [&](Tape& t) { return bce_with_logits(t.param(logits), targets); }, 22);
  check_op({&logits}, 1, 1, [&](Tape& t) { return mse(t.param(logits), targets); }, 23);
}

TEST_CASE("eval-mode batch norm gradients") {
  std::mt19937_64 rng(9);
  auto a = random_param("a", 5, 2, rng);
  auto gamma = random_param("gamma", 1, 2, rng);
  auto beta = random_param("beta", 1, 2, rng);
  Parameter rm, rv;
  rm.value = random_matrix(1, 2, rng);
  rv.value = Matrix(1, 2, 0.7);
  const Matrix dir = random_matrix(5, 2, rng);
  // gradient_check uses training tapes; check the eval path by hand.
  Tape t(false);
  t.backward(project(batch_norm(t.param(a), t.param(gamma), t.param(beta), rm, rv), dir));
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double expected = dir(r, c) * gamma.value(0, c) / std::sqrt(0.7 + 1e-5);
      CHECK(a.grad(r, c) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward twice after zero_grad gives identical gradients") {
  std::mt19937_64 rng(4);
  auto a = random_param("a", 3, 3, rng);
  auto b = random_param("b", 3, 2, rng);
  auto run = [&] {
    a.grad = Matrix(3, 3);
    b.grad = Matrix(3, 2);
    Tape t(true, 7);
    t.backward(sum(relu(matmul(t.param(a), t.param(b)))));
    return std::pair{a.grad, b.grad};
  };
  CHECK(run() == run());
}

TEST_CASE("parameter store, clipping and adam") {
  std::mt19937_64 rng(1);
  ParameterStore store;
  auto& w = store.add("w", 2, 2, 4, rng);
  store.add_constant("bn.mean", 1, 2, 0.0, false);
  CHECK(store.count() == 4);
  for (double v : w.value.data) CHECK(std::abs(v) <= 0.5);
  CHECK_THROWS_AS(store.add_constant("w", 1, 1, 0.0, true), InvariantError);

  w.grad = Matrix::from_rows({{1, 1}, {1, 1}});
  CHECK(store.grad_norm() == doctest::Approx(2.0));
  store.clip_grad_norm(1.0);
  for (double g : w.grad.data) CHECK(g == doctest::Approx(0.5).epsilon(1e-5));
  w.grad = Matrix(2, 2);
  w.grad(0, 0) = 0.1;
  store.clip_grad_norm(1.0);
  CHECK(w.grad(0, 0) == 0.1);

  // First Adam step moves each coordinate by lr * sign(g).
  const Matrix before = w.value;
  w.grad = Matrix::from_rows({{0.3, -2.0}, {0.0, 1e-3}});
  store.adam_step(0.01);
  CHECK(w.value(0, 0) == doctest::Approx(before(0, 0) - 0.01).epsilon(1e-6));
  CHECK(w.value(0, 1) == doctest::Approx(before(0, 1) + 0.01).epsilon(1e-6));
  CHECK(w.value(1, 0) == before(1, 0));
  CHECK(store.step() == 1);

  // Adam minimizes a quadratic.
  ParameterStore q;
  auto& x = q.add_constant("x", 1, 1, 5.0, true);
  for (int i = 0; i < 2000; ++i) {
    q.zero_grad();
    Tape t(false);
    const Var v = t.param(x);
    t.backward(mul(v, v));
    q.adam_step(0.05);
  }
  CHECK(std::abs(x.value(0, 0)) < 1e-2);
}

TEST_CASE("plateau scheduler") {
  PlateauScheduler s(0.01);
  CHECK(s.step(1.0) == 0.01);
  for (int i = 0; i < 5; ++i) CHECK(s.step(1.0) == 0.01);
  CHECK(s.step(1.0) == 0.005);
  CHECK(s.step(0.5) == 0.005);
  PlateauScheduler tiny(2e-5);
  for (int i = 0; i < 40; ++i) tiny.step(1.0);
  CHECK(tiny.lr() == 1e-5);
}

TEST_CASE("checkpoint round trip is bit exact") {
  std::mt19937_64 rng(3);
  ParameterStore store;
  store.add("a", 3, 4, 3, rng);
  store.add("b", 1, 4, 3, rng);
  store.add_constant("bn.var", 1, 4, 1.25, false);
  store.at("a").value(0, 0) = std::nextafter(1.0, 2.0);
  std::stringstream buf;
  write_checkpoint(buf, {{"variant", "BMP"}, {"manifest", "abc"}}, store);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "MOLMPCKP");
  std::stringstream in(bytes);
  const auto ck = read_checkpoint(in);
  CHECK(ck.meta["variant"] == "BMP");
  REQUIRE(ck.arrays.size() == 3);
  CHECK(ck.arrays[2].trainable == false);
  ParameterStore other;
  std::mt19937_64 rng2(99);
  other.add("a", 3, 4, 3, rng2);
  other.add("b", 1, 4, 3, rng2);
  other.add_constant("bn.var", 1, 4, 0.0, false);
  load_into(ck, other);
  for (auto name : {"a", "b", "bn.var"}) CHECK(other.at(name).value == store.at(name).value);

  std::stringstream bad(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(bad), InputError);
  std::stringstream junk("NOTACKPT....");
  CHECK_THROWS_AS(read_checkpoint(junk), InputError);
  ParameterStore wrong;
  wrong.add("a", 2, 4, 3, rng2);
  CHECK_THROWS_AS(load_into(ck, wrong), InputError);
}
