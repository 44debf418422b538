#include <cmath>
#include <functional>
#include <numeric>

#include "doctest.h"

#include "absa/errors.hpp"
#include "absa/gradcheck.hpp"
#include "absa/tensor.hpp"

using namespace absa;

namespace {

Tensor uniform(Shape shape, Rng& rng, bool grad = true, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Index n = std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = u(rng);
  return Tensor::from_values(std::move(shape), v, grad);
}

Tensor weighted(Tape& t, const Tensor& x, const Tensor& w) { return sum(t, mul(t, x, w)); }

double max_error(const std::function<Tensor(Tape&)>& f, const std::vector<NamedTensor>& params) {
  return check_gradients(f, params).max_relative_error;
}

}  // namespace

TEST_CASE("matmul: identity and projection") {
  Tape tape;
  Tensor eye = Tensor::from_values({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor m = Tensor::from_values({2, 2}, std::vector<double>{1, 2, 3, 4});
  CHECK(matmul(tape, eye, m).value() == m.value());

  Tensor p = Tensor::from_values({2, 2}, std::vector<double>{1, 0, 0, 0});
  Tensor col = Tensor::from_values({2, 1}, std::vector<double>{5, 7});
  Tensor r = matmul(tape, p, col);
  CHECK(r.shape() == Shape{2, 1});
  CHECK(r.at(0) == 5.0);
  CHECK(r.at(1) == 0.0);
}

TEST_CASE("matmul agrees with a triple loop") {
  Rng rng(1);
  Tensor a = uniform({3, 4}, rng, false);
  Tensor b = uniform({4, 2}, rng, false);
  Tape tape;
  Tensor c = matmul(tape, a, b);
  REQUIRE(c.shape() == Shape{3, 2});
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 2; ++j) {
      double dot = 0.0;
      for (Index k = 0; k < 4; ++k) dot += a.at(i * 4 + k) * b.at(k * 2 + j);
      CHECK(std::abs(c.at(i * 2 + j) - dot) < 1e-12);
    }
  }
}

TEST_CASE("matmul rejects mismatched shapes with both shapes in the message") {
  Tape tape;
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(tape, a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2 x 3]") != std::string::npos);
  }
}

TEST_CASE("sigmoid values") {
  Tape tape;
  Tensor x = Tensor::from_values({3}, std::vector<double>{0.0, -50.0, 1.0});
  Tensor y = sigmoid(tape, x);
  CHECK(y.at(0) == 0.5);
  CHECK(y.at(1) > 0.0);
  CHECK(y.at(1) < 1e-21);
  CHECK(y.at(2) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
  CHECK(y.at(2) == doctest::Approx(0.7310585786).epsilon(1e-10));
  Tensor big = sigmoid(tape, Tensor::from_values({2}, std::vector<double>{800.0, -800.0}));
  CHECK(big.at(0) == 1.0);
  CHECK(big.at(1) >= 0.0);
}

TEST_CASE("tanh values and odd symmetry") {
  Tape tape;
  Rng rng(2);
  Tensor x = uniform({7}, rng, false, -3, 3);
  Tensor pos = tanh_act(tape, x);
  Tensor neg = tanh_act(tape, affine(tape, x, -1.0, 0.0));
  for (Index i = 0; i < 7; ++i) CHECK(neg.at(i) == -pos.at(i));
  Tensor special = tanh_act(tape, Tensor::from_values({2}, std::vector<double>{0.0, 1.0}));
  CHECK(special.at(0) == 0.0);
  CHECK(special.at(1) == doctest::Approx(0.7615941559).epsilon(1e-10));
}

TEST_CASE("softmax examples") {
  Tape tape;
  Tensor u = softmax(tape, Tensor::from_values({3}, std::vector<double>{1, 1, 1}));
  for (Index i = 0; i < 3; ++i) CHECK(u.at(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Tensor s = softmax(tape, Tensor::from_values({2}, std::vector<double>{1000, 0}));
  CHECK(std::isfinite(s.at(0)));
  CHECK(s.at(0) == doctest::Approx(1.0));
  CHECK(s.at(1) < 1e-300);

  Tensor v = softmax(tape, Tensor::from_values({3}, std::vector<double>{1, 2, 3}));
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(v.at(0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(v.at(0) == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(v.at(1) == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(v.at(2) == doctest::Approx(0.66524096).epsilon(1e-7));
}

TEST_CASE("property: softmax slices sum to one for inputs up to 1e3") {
  Rng rng(3);
  Tape tape;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = uniform({4, 5}, rng, false, -1e3, 1e3);
    for (int axis : {0, 1}) {
      Tensor y = softmax(tape, x, axis);
      Matrix sums = axis == 0 ? Matrix(y.value().colwise().sum()) : Matrix(y.value().rowwise().sum());
      for (Index i = 0; i < sums.size(); ++i) CHECK(std::abs(sums.data()[i] - 1.0) < 1e-12);
      CHECK(y.value().allFinite());
    }
  }
}

TEST_CASE("backward: sum and sum of squares") {
  Tensor x = Tensor::from_values({3}, std::vector<double>{1, 2, 3}, true);
  {
    Tape tape;
    backward(tape, sum(tape, x));
    for (Index i = 0; i < 3; ++i) CHECK(x.grad()(i, 0) == 1.0);
  }
  x.zero_grad();
  {
    Tape tape;
    backward(tape, sum(tape, mul(tape, x, x)));
    CHECK(x.grad()(0, 0) == 2.0);
    CHECK(x.grad()(1, 0) == 4.0);
    CHECK(x.grad()(2, 0) == 6.0);
  }
}

TEST_CASE("backward accumulates over repeated uses and rejects non-scalar losses") {
  Tensor x = Tensor::from_values({2}, std::vector<double>{1.5, -0.5}, true);
  Tape tape;
  Tensor y = add(tape, x, add(tape, x, x));
  backward(tape, sum(tape, y));
  CHECK(x.grad()(0, 0) == 3.0);
  CHECK(x.grad()(1, 0) == 3.0);
  Tape other;
  Tensor v = affine(other, x, 2.0, 0.0);
  CHECK_THROWS_AS(backward(other, v), ContractError);
}

TEST_CASE("property: op gradients match central differences") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a = uniform({3, 4}, rng);
    Tensor b = uniform({4, 2}, rng);
    Tensor c = uniform({3, 4}, rng);
    Tensor v = uniform({4}, rng);
    Tensor s = uniform({1}, rng);
    Tensor w34 = uniform({3, 4}, rng, false);
    Tensor w32 = uniform({3, 2}, rng, false);
    Tensor w4 = uniform({4}, rng, false);
    Tensor w3 = uniform({3}, rng, false);
    Tensor w8 = uniform({8}, rng, false);
    Tensor w36 = uniform({3, 6}, rng, false);
    std::vector<NamedTensor> ac = {{"a", a}, {"c", c}};

    CHECK(max_error([&](Tape& t) { return weighted(t, matmul(t, a, b), w32); },
                    {{"a", a}, {"b", b}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, matmul(t, a, v), w3); },
                    {{"a", a}, {"v", v}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, transpose(t, transpose(t, a)), w34); },
                    {{"a", a}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, add(t, a, c), w34); }, ac) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, sub(t, a, c), w34); }, ac) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, mul(t, a, c), w34); }, ac) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, sigmoid(t, a), w34); }, {{"a", a}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, tanh_act(t, a), w34); }, {{"a", a}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, add_scalar(t, a, s), w34); },
                    {{"a", a}, {"s", s}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, add_row_broadcast(t, a, v), w34); },
                    {{"a", a}, {"v", v}}) < 1e-4);
    for (int axis : {0, 1}) {
      CHECK(max_error([&](Tape& t) { return weighted(t, softmax(t, a, axis), w34); }, {{"a", a}}) <
            1e-4);
      CHECK(max_error([&](Tape& t) { return weighted(t, log_softmax(t, a, axis), w34); },
                      {{"a", a}}) < 1e-4);
    }
    CHECK(max_error([&](Tape& t) { return mean(t, mul(t, a, c)); }, ac) < 1e-4);
    CHECK(max_error([&](Tape& t) { return sum_squares(t, a); }, {{"a", a}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return pick(t, log_softmax(t, v, 0), 2); }, {{"v", v}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, mean_rows(t, a), w4); }, {{"a", a}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, max_rows(t, a), w4); }, {{"a", a}}) < 1e-4);
    CHECK(max_error(
              [&](Tape& t) {
                Tensor parts[] = {v, v};
                return weighted(t, concat(t, parts), w8);
              },
              {{"v", v}}) < 1e-4);
    CHECK(max_error(
              [&](Tape& t) {
                Tensor rows[] = {row(t, a, 0), row(t, c, 2), v};
                return weighted(t, stack_rows(t, rows), w34);
              },
              {{"a", a}, {"c", c}, {"v", v}}) < 1e-4);
    CHECK(max_error(
              [&](Tape& t) {
                std::vector<Index> idx = {2, 0, 2};
                return weighted(t, gather_rows(t, a, idx), w34);
              },
              {{"a", a}}) < 1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, embedding_row(t, a, 1), w4); }, {{"a", a}}) <
          1e-4);
    CHECK(max_error([&](Tape& t) { return weighted(t, unfold_windows(t, transpose(t, a), 2), w36); },
                    {{"a", a}}) < 1e-4);
  }
}

TEST_CASE("matmul_nt equals matmul with an explicit transpose") {
  Rng rng(5);
  Tensor a = uniform({3, 4}, rng, true);
  Tensor b = uniform({5, 4}, rng, true);
  Tensor w = uniform({3, 5}, rng, false);
  Tape tape;
  CHECK((matmul_nt(tape, a, b).value() - matmul(tape, a, transpose(tape, b)).value()).norm() < 1e-12);
  CHECK(max_error([&](Tape& t) { return weighted(t, matmul_nt(t, a, b), w); },
                  {{"a", a}, {"b", b}}) < 1e-4);
}

TEST_CASE("composed GRU-like graph with cross-entropy matches finite differences") {
  Rng rng(6);
  Tensor wz = uniform({3, 2}, rng);
  Tensor uz = uniform({3, 3}, rng);
  Tensor wc = uniform({3, 2}, rng);
  Tensor x = uniform({2}, rng);
  Tensor h = uniform({3}, rng);
  CHECK(max_error(
            [&](Tape& t) {
              Tensor z = sigmoid(t, add(t, matmul(t, wz, x), matmul(t, uz, h)));
              Tensor c = tanh_act(t, matmul(t, wc, x));
              Tensor hn = add(t, h, mul(t, z, sub(t, c, h)));
              return affine(t, pick(t, log_softmax(t, hn, 0), 1), -1.0, 0.0);
            },
            {{"wz", wz}, {"uz", uz}, {"wc", wc}, {"x", x}, {"h", h}}) < 1e-4);
}

TEST_CASE("dropout") {
  Rng rng(7);
  Tensor x = uniform({100000}, rng, false, 0.5, 1.5);
  Tape tape;
  CHECK(same_storage(dropout(tape, x, 0.0, true, rng), x));
  CHECK(same_storage(dropout(tape, x, 0.7, false, rng), x));
  CHECK_THROWS_AS(dropout(tape, x, 1.0, true, rng), ConfigError);
  CHECK_THROWS_AS(dropout(tape, x, -0.1, true, rng), ConfigError);

  Rng seeded(99);
  Tensor y = dropout(tape, x, 0.5, true, seeded);
  Index survivors = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y.at(i) != 0.0) {
      ++survivors;
      CHECK(y.at(i) == 2.0 * x.at(i));
    }
  }
  double frac = static_cast<double>(survivors) / static_cast<double>(y.size());
  CHECK(std::abs(frac - 0.5) < 0.01);
  CHECK(std::abs(y.value().mean() / x.value().mean() - 1.0) < 0.01);

  Rng again(99);
  CHECK(dropout(tape, x, 0.5, true, again).value() == y.value());
}

TEST_CASE("clip_global_norm examples") {
  auto with_grad = [](std::vector<double> g) {
    Tensor t = Tensor::zeros({static_cast<Index>(g.size())}, true);
    for (std::size_t i = 0; i < g.size(); ++i) t.mutable_grad()(static_cast<Index>(i), 0) = g[i];
    return t;
  };
  {
    std::vector<Tensor> ps = {with_grad({3, 4})};
    CHECK(clip_global_norm(ps, 5.0) == 5.0);
    CHECK(ps[0].grad()(0, 0) == 3.0);
    CHECK(ps[0].grad()(1, 0) == 4.0);
  }
  {
    std::vector<Tensor> ps = {with_grad({6, 8})};
    clip_global_norm(ps, 5.0);
    CHECK(ps[0].grad()(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(ps[0].grad()(1, 0) == doctest::Approx(4.0).epsilon(1e-15));
  }
  {
    // 144 = 4^2 + 8^2 + 8^2; norm 12.
    std::vector<Tensor> ps = {with_grad({4}), with_grad({8, 8})};
    CHECK(clip_global_norm(ps, 5.0) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(ps[0].grad()(0, 0) == doctest::Approx(4.0 * 5.0 / 12.0).epsilon(1e-15));
    CHECK(ps[1].grad()(1, 0) == doctest::Approx(8.0 * 5.0 / 12.0).epsilon(1e-15));
    CHECK(std::abs(global_grad_norm(ps) - 5.0) < 1e-9);
  }
}

TEST_CASE("property: clip_global_norm is idempotent") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tensor> ps = {Tensor::zeros({3}, true), Tensor::zeros({2, 2}, true)};
    for (auto& p : ps) {
      Matrix& g = p.mutable_grad();
      for (Index i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
    }
    clip_global_norm(ps, 5.0);
    std::vector<Matrix> once = {ps[0].grad(), ps[1].grad()};
    clip_global_norm(ps, 5.0);
    CHECK((ps[0].grad() - once[0]).norm() <= 1e-12);
    CHECK((ps[1].grad() - once[1]).norm() <= 1e-12);
    CHECK(global_grad_norm(ps) <= 5.0 + 1e-9);
  }
}

TEST_CASE("property: identical seed and op sequence give bit-identical results") {
  auto run = [] {
    Rng rng(11);
    Tensor a = uniform({4, 3}, rng);
    Tensor v = uniform({3}, rng);
    Tape tape;
    Tensor h = dropout(tape, tanh_act(tape, matmul(tape, a, v)), 0.3, true, rng);
    Tensor loss = sum_squares(tape, softmax(tape, h, 0));
    backward(tape, loss);
    return std::make_pair(loss.item(), a.grad());
  };
  auto [l1, g1] = run();
  auto [l2, g2] = run();
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("ops on constants record nothing") {
  Tape tape;
  Tensor a = Tensor::from_values({2}, std::vector<double>{1, 2});
  Tensor y = tanh_act(tape, add(tape, a, a));
  CHECK(tape.size() == 0);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("shape invariants") {
  Tensor t = Tensor::zeros({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.flat().size() == 24);
  CHECK(t.grad().size() == 24);
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}
