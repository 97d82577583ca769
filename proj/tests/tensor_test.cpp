#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "tavce/grad_check.hpp"
#include "tavce/grad_suite.hpp"
#include "tavce/ops.hpp"
#include "tavce/rng.hpp"
#include "tavce/tensor.hpp"

using namespace tavce;

TEST_CASE("elementwise examples") {
  auto a = Tensor<double>::constant({2}, {1, 2});
  auto b = Tensor<double>::constant({2}, {3, 4});
  CHECK(add(a, b).value() == std::vector<double>{4, 6});
  CHECK(sub(b, a).value() == std::vector<double>{2, 2});
  CHECK(mul(a, b).value() == std::vector<double>{3, 8});

  auto r = relu(Tensor<double>::constant({3}, {-1, 0, 2}));
  CHECK(r.value() == std::vector<double>{0, 0, 2});

  CHECK(sigmoid(Tensor<double>::scalar(0)).item() == Catch::Approx(0.5));
  CHECK(tanh_op(Tensor<double>::scalar(0)).item() == 0.0);
}

TEST_CASE("elementwise shape mismatch is an error") {
  auto a = Tensor<double>::constant({2}, {1, 2});
  auto b = Tensor<double>::constant({3}, {1, 2, 3});
  CHECK_THROWS_AS(add(a, b), TensorError);
}

TEST_CASE("scalar broadcast on either side") {
  auto a = Tensor<double>::constant({3}, {1, 2, 3});
  auto s = Tensor<double>::scalar(10);
  CHECK(add(a, s).value() == std::vector<double>{11, 12, 13});
  CHECK(mul(s, a).value() == std::vector<double>{10, 20, 30});
}

TEST_CASE("non-finite results fault with the op name") {
  auto a = Tensor<double>::constant({1}, {1});
  auto z = Tensor<double>::constant({1}, {0});
  CHECK_THROWS_WITH(div(a, z), Catch::Matchers::ContainsSubstring("div"));
}

TEST_CASE("matmul examples") {
  auto ones23 = Tensor<double>::constant({2, 3}, std::vector<double>(6, 1.0));
  auto ones32 = Tensor<double>::constant({3, 2}, std::vector<double>(6, 1.0));
  auto c = matmul(ones23, ones32);
  REQUIRE(c.shape() == Shape{2, 2});
  for (double v : c.value()) CHECK(v == 3.0);

  SeededRng rng(7);
  std::vector<double> av(9);
  for (auto& v : av) v = rng.next_gaussian();
  auto m = Tensor<double>::constant({3, 3}, av);
  auto eye = Tensor<double>::constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(matmul(eye, m).value() == av);

  CHECK_THROWS_AS(matmul(ones23, ones23), TensorError);
}

TEST_CASE("matmul associativity on small random matrices") {
  SeededRng rng(11);
  auto make = [&](std::size_t r, std::size_t c) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.next_gaussian();
    return Tensor<double>::constant({r, c}, v);
  };
  auto a = make(3, 4), b = make(4, 5), c = make(5, 2);
  auto left = matmul(matmul(a, b), c);
  auto right = matmul(a, matmul(b, c));
  for (std::size_t i = 0; i < left.size(); ++i) {
    CHECK(std::abs(left.value()[i] - right.value()[i]) < 1e-10);
  }
}

TEST_CASE("conv1x1 identity kernel leaves the map unchanged") {
  SeededRng rng(3);
  std::vector<double> fv(4 * 2 * 2);
  for (auto& v : fv) v = rng.next_gaussian();
  auto f = Tensor<double>::constant({4, 2, 2}, fv);
  std::vector<double> wv(16, 0.0);
  for (int i = 0; i < 4; ++i) wv[i * 4 + i] = 1.0;
  auto w = Tensor<double>::constant({4, 4}, wv);
  CHECK(conv1x1(f, w).value() == fv);
}

TEST_CASE("conv3x3 stride arithmetic and channel mismatch") {
  auto x = Tensor<double>::constant({1, 32, 32}, std::vector<double>(1024, 0.5));
  auto w = Tensor<double>::constant({16, 1, 3, 3}, std::vector<double>(16 * 9, 0.1));
  CHECK(conv3x3<double>(x, w, nullptr, 2).shape() == Shape{16, 16, 16});
  CHECK(conv3x3<double>(x, w, nullptr, 1).shape() == Shape{16, 32, 32});

  auto bad_w = Tensor<double>::constant({16, 2, 3, 3}, std::vector<double>(16 * 18, 0.1));
  CHECK_THROWS_AS(conv3x3(x, bad_w), TensorError);
}

TEST_CASE("reduce examples") {
  CHECK(mean(Tensor<double>::constant({3}, {1, 2, 3})).item() == 2.0);
  CHECK(l2_norm(Tensor<double>::constant({2, 2}, {0, 0, 0, 0})).item() == 0.0);
  auto s = sum_axis0(Tensor<double>::constant({2, 2}, {1, 2, 3, 4}));
  CHECK(s.value() == std::vector<double>{4, 6});
  CHECK_THROWS_AS(sum(Tensor<double>::constant({0}, {})), TensorError);
}

TEST_CASE("backward: linear loss gives ones gradient") {
  Tape<double> tape;
  auto x = Tensor<double>::leaf(&tape, {5}, {1, 2, 3, 4, 5}, true);
  auto loss = sum(x);
  tape.backward(loss);
  CHECK(x.grad() == std::vector<double>(5, 1.0));
}

TEST_CASE("backward: quadratic scalar") {
  Tape<double> tape;
  auto x = Tensor<double>::leaf(&tape, {1}, {3}, true);
  auto loss = mul(x, x);
  tape.backward(loss);
  CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("backward rejects non-scalar and detached losses") {
  Tape<double> tape;
  auto x = Tensor<double>::leaf(&tape, {2}, {1, 2}, true);
  auto y = scale(x, 2.0);
  CHECK_THROWS_AS(tape.backward(y), TensorError);
  auto detached = Tensor<double>::constant({1}, {1});
  CHECK_THROWS_AS(tape.backward(detached), TensorError);
}

TEST_CASE("gradient linearity: sum of losses equals summed gradients") {
  SeededRng rng(5);
  std::vector<double> xv(6);
  for (auto& v : xv) v = rng.next_gaussian();

  auto grads_of = [&](bool joint) {
    Tape<double> tape;
    auto x = Tensor<double>::leaf(&tape, {6}, xv, true);
    auto l1 = sum(mul(x, x));
    auto l2 = mean(scale(x, 3.0));
    if (joint) {
      auto loss = add(l1, l2);
      tape.backward(loss);
      return x.grad();
    }
    tape.backward(l1);
    std::vector<double> g1 = x.grad();
    x.zero_grad();
    // The tape was consumed; rebuild the second loss on a fresh tape.
    Tape<double> tape2;
    auto x2 = Tensor<double>::leaf(&tape2, {6}, xv, true);
    auto l2b = mean(scale(x2, 3.0));
    tape2.backward(l2b);
    for (std::size_t i = 0; i < g1.size(); ++i) g1[i] += x2.grad()[i];
    return g1;
  };
  auto joint = grads_of(true);
  auto split = grads_of(false);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    CHECK(std::abs(joint[i] - split[i]) <= 1e-12);
  }
}

TEST_CASE("seeded rng is bitwise reproducible") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  SeededRng g1(42), g2(42);
  for (int i = 0; i < 1000; ++i) {
    double x = g1.next_gaussian(), y = g2.next_gaussian();
    REQUIRE(std::memcmp(&x, &y, sizeof x) == 0);
  }
}

TEST_CASE("check_gradients: sum of squares passes") {
  SeededRng rng(9);
  std::vector<double> x(8);
  for (auto& v : x) v = 2.0 * rng.next_uniform() - 1.0;
  auto report = check_gradients(
      [](Tape<double>&, const Tensor<double>& t) { return sum(mul(t, t)); }, x, {8}, 1e-5, 1e-6);
  CHECK(report.pass);
}

TEST_CASE("check_gradients: constant function has zero error") {
  auto report = check_gradients(
      [](Tape<double>&, const Tensor<double>&) { return Tensor<double>::scalar(1.0); },
      std::vector<double>(4, 0.3), {4}, 1e-5, 1e-6);
  CHECK(report.pass);
  CHECK(report.max_rel_error == 0.0);
}

TEST_CASE("check_gradients: degenerate cosine raises instead of passing") {
  auto f = [](Tape<double>&, const Tensor<double>& t) {
    bool degenerate = false;
    auto c = flat_cosine(t, t, &degenerate);
    if (degenerate) throw TensorError("flat_cosine: degenerate zero-norm input");
    return c;
  };
  CHECK_THROWS_AS(check_gradients(f, std::vector<double>(4, 0.0), {4}, 1e-5, 1e-4), TensorError);
}

TEST_CASE("gradient suite passes for every registered op") {
  for (const auto& r : run_grad_suite({1, 2})) {
    INFO(r.name << " max_rel_error=" << r.max_rel_error);
    CHECK(r.pass);
  }
}
