#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <utility>
#include <vector>

#include <tavce/correlation.hpp>
#include <tavce/grad_check.hpp>
#include <tavce/rng.hpp>

using namespace tavce;

namespace {

// Independent straight-loop float64 oracles. These share nothing with the
// tensor implementation: plain vectors, explicit index arithmetic.

std::vector<double> oracle_covariance(const std::vector<double>& fi,
                                      const std::vector<double>& fj) {
  const std::size_t d = fi.size();
  double mi = 0, mj = 0;
  for (std::size_t k = 0; k < d; ++k) {
    mi += fi[k];
    mj += fj[k];
  }
  mi /= static_cast<double>(d);
  mj /= static_cast<double>(d);
  std::vector<double> out(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      out[r * d + c] = (fi[r] - mi) * (fj[c] - mj);
    }
  }
  return out;
}

double oracle_flat_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return dot / (na * nb);
}

double oracle_triplet(const std::vector<double>& ca, const std::vector<double>& pos,
                      const std::vector<double>& neg) {
  return (1.0 - oracle_flat_cosine(ca, pos)) + (1.0 + oracle_flat_cosine(ca, neg));
}

std::vector<double> random_vec(SeededRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_gaussian();
  return v;
}

Tensor<double> vec_tensor(const std::vector<double>& v) {
  std::vector<double> copy = v;
  return Tensor<double>::constant({v.size()}, std::move(copy));
}

Tensor<double> mat_tensor(const std::vector<double>& v, std::size_t d) {
  std::vector<double> copy = v;
  return Tensor<double>::constant({d, d}, std::move(copy));
}

}  // namespace

TEST_CASE("covariance matches a straight-loop oracle over random cases") {
  SeededRng rng(41);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 2 + rng.next_below(5);  // D in [2, 6]
    auto fi = random_vec(rng, d);
    auto fj = random_vec(rng, d);
    auto expect = oracle_covariance(fi, fj);
    Tensor<double> got = covariance(vec_tensor(fi), vec_tensor(fj));
    REQUIRE(got.shape() == Shape{d, d});
    for (std::size_t k = 0; k < d * d; ++k) {
      REQUIRE(got.value()[k] == Catch::Approx(expect[k]).margin(1e-12));
    }
  }
}

TEST_CASE("covariance worked example") {
  Tensor<double> got = covariance(vec_tensor({1.0, -1.0}), vec_tensor({2.0, 0.0}));
  REQUIRE(got.value() == std::vector<double>{1.0, -1.0, -1.0, 1.0});
}

TEST_CASE("covariance of a constant vector is the zero matrix") {
  auto zero = [](const Tensor<double>& m) {
    for (double v : m.value()) REQUIRE(v == 0.0);
  };
  zero(covariance(vec_tensor({3.0, 3.0, 3.0}), vec_tensor({1.0, 2.0, 5.0})));
  zero(covariance(vec_tensor({1.0, 2.0, 5.0}), vec_tensor({-0.25, -0.25, -0.25})));
}

TEST_CASE("covariance transpose symmetry, shift invariance, and scaling") {
  SeededRng rng(42);
  for (int c = 0; c < 20; ++c) {
    const std::size_t d = 2 + rng.next_below(5);
    auto fi = random_vec(rng, d);
    auto fj = random_vec(rng, d);
    auto cij = covariance(vec_tensor(fi), vec_tensor(fj));
    auto cji = covariance(vec_tensor(fj), vec_tensor(fi));
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t cc = 0; cc < d; ++cc) {
        REQUIRE(cij.value()[r * d + cc] == cji.value()[cc * d + r]);
      }
    }

    auto shifted = fi;
    const double shift = rng.next_gaussian();
    for (double& x : shifted) x += shift;
    auto cshift = covariance(vec_tensor(shifted), vec_tensor(fj));
    for (std::size_t k = 0; k < d * d; ++k) {
      REQUIRE(cshift.value()[k] == Catch::Approx(cij.value()[k]).margin(1e-12));
    }

    const double alpha = rng.next_gaussian();
    auto scaled = fi;
    for (double& x : scaled) x *= alpha;
    auto cscaled = covariance(vec_tensor(scaled), vec_tensor(fj));
    for (std::size_t k = 0; k < d * d; ++k) {
      REQUIRE(cscaled.value()[k] == Catch::Approx(alpha * cij.value()[k]).margin(1e-12));
    }
  }
}

TEST_CASE("covariance(f, f) is symmetric and PSD on its diagonal contributions") {
  SeededRng rng(43);
  auto f = random_vec(rng, 5);
  auto c = covariance(vec_tensor(f), vec_tensor(f));
  for (std::size_t r = 0; r < 5; ++r) {
    REQUIRE(c.value()[r * 5 + r] >= 0.0);
    for (std::size_t cc = 0; cc < 5; ++cc) {
      REQUIRE(c.value()[r * 5 + cc] == c.value()[cc * 5 + r]);
    }
  }
}

TEST_CASE("covariance rejects bad inputs") {
  REQUIRE_THROWS_AS(covariance(vec_tensor({1.0}), vec_tensor({2.0})), TensorError);
  REQUIRE_THROWS_AS(covariance(vec_tensor({1.0, 2.0}), vec_tensor({1.0, 2.0, 3.0})), TensorError);
  Tensor<double> m = Tensor<double>::constant({2, 2}, {1, 2, 3, 4});
  REQUIRE_THROWS_AS(covariance(m, m), TensorError);
}

TEST_CASE("flat_cosine matches the loop oracle over random cases") {
  SeededRng rng(44);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 2 + rng.next_below(5);
    auto a = random_vec(rng, d * d);
    auto b = random_vec(rng, d * d);
    double expect = oracle_flat_cosine(a, b);
    Tensor<double> got = flat_cosine(mat_tensor(a, d), mat_tensor(b, d));
    REQUIRE(got.item() == Catch::Approx(expect).margin(1e-12));
    REQUIRE(got.item() >= -1.0 - 1e-12);
    REQUIRE(got.item() <= 1.0 + 1e-12);
  }
}

TEST_CASE("flat_cosine anchors and degenerate flag") {
  SeededRng rng(45);
  auto v = random_vec(rng, 9);
  auto neg = v;
  for (double& x : neg) x = -x;
  REQUIRE(flat_cosine(mat_tensor(v, 3), mat_tensor(v, 3)).item() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(flat_cosine(mat_tensor(v, 3), mat_tensor(neg, 3)).item() ==
          Catch::Approx(-1.0).margin(1e-12));

  bool degen = false;
  std::vector<double> zeros(9, 0.0);
  Tensor<double> r = flat_cosine(mat_tensor(zeros, 3), mat_tensor(v, 3), &degen);
  REQUIRE(degen);
  REQUIRE(r.item() == 0.0);
  REQUIRE_FALSE(r.requires_grad());

  degen = true;
  flat_cosine(mat_tensor(v, 3), mat_tensor(v, 3), &degen);
  REQUIRE_FALSE(degen);
}

TEST_CASE("flat_cosine scaling invariance and sign flip") {
  SeededRng rng(46);
  auto a = random_vec(rng, 16);
  auto b = random_vec(rng, 16);
  double base = flat_cosine(mat_tensor(a, 4), mat_tensor(b, 4)).item();
  auto a3 = a;
  for (double& x : a3) x *= 3.5;
  REQUIRE(flat_cosine(mat_tensor(a3, 4), mat_tensor(b, 4)).item() ==
          Catch::Approx(base).margin(1e-12));
  auto bneg = b;
  for (double& x : bneg) x = -x;
  REQUIRE(flat_cosine(mat_tensor(a, 4), mat_tensor(bneg, 4)).item() ==
          Catch::Approx(-base).margin(1e-12));
}

TEST_CASE("flat_cosine rejects shape mismatch") {
  Tensor<double> a = Tensor<double>::constant({2, 2}, {1, 2, 3, 4});
  Tensor<double> b = Tensor<double>::constant({4}, {1, 2, 3, 4});
  REQUIRE_THROWS_AS(flat_cosine(a, b), TensorError);
}

TEST_CASE("triplet loss matches the loop oracle and stays in range") {
  SeededRng rng(47);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 2 + rng.next_below(5);
    auto ca = random_vec(rng, d * d);
    auto pos = random_vec(rng, d * d);
    auto neg = random_vec(rng, d * d);
    double expect = oracle_triplet(ca, pos, neg);
    Tensor<double> got =
        tavc_triplet_loss(mat_tensor(ca, d), mat_tensor(pos, d), mat_tensor(neg, d));
    REQUIRE(got.item() == Catch::Approx(expect).margin(1e-12));
    REQUIRE(got.item() >= 0.0 - 1e-12);
    REQUIRE(got.item() <= 4.0 + 1e-12);
  }
}

TEST_CASE("triplet loss analytic anchors") {
  SeededRng rng(48);
  auto ca = random_vec(rng, 9);
  auto neg = ca;
  for (double& x : neg) x = -x;
  // Perfect alignment with the positive, perfect anti-alignment with the negative.
  REQUIRE(tavc_triplet_loss(mat_tensor(ca, 3), mat_tensor(ca, 3), mat_tensor(neg, 3)).item() ==
          Catch::Approx(0.0).margin(1e-12));
  // pos == neg: the cosines cancel exactly.
  auto other = random_vec(rng, 9);
  REQUIRE(tavc_triplet_loss(mat_tensor(ca, 3), mat_tensor(other, 3), mat_tensor(other, 3)).item() ==
          2.0);
  // Both cosines zero: orthogonal pos and neg.
  std::vector<double> e1(9, 0.0), e2(9, 0.0), e3(9, 0.0);
  e1[0] = 1.0;
  e2[1] = 1.0;
  e3[2] = 1.0;
  REQUIRE(tavc_triplet_loss(mat_tensor(e1, 3), mat_tensor(e2, 3), mat_tensor(e3, 3)).item() == 2.0);
}

TEST_CASE("objective sums per-triplet losses") {
  SeededRng rng(49);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 2 + rng.next_below(5);
    const std::size_t n = 1 + rng.next_below(6);
    std::vector<CorrelationTriplet<double>> batch;
    double expect = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto ca = random_vec(rng, d * d);
      auto pos = random_vec(rng, d * d);
      auto neg = random_vec(rng, d * d);
      expect += oracle_triplet(ca, pos, neg);
      batch.push_back({mat_tensor(ca, d), mat_tensor(pos, d), mat_tensor(neg, d)});
    }
    REQUIRE(tavc_objective(batch).item() == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("objective edge cases") {
  REQUIRE_THROWS_AS(tavc_objective<double>({}), TensorError);
  SeededRng rng(50);
  auto ca = random_vec(rng, 4);
  auto pos = random_vec(rng, 4);
  auto neg = random_vec(rng, 4);
  CorrelationTriplet<double> t{mat_tensor(ca, 2), mat_tensor(pos, 2), mat_tensor(neg, 2)};
  double single = tavc_objective<double>({t}).item();
  REQUIRE(tavc_objective<double>({t, t}).item() == Catch::Approx(2 * single).margin(1e-12));
}

TEST_CASE("car_loss matches the loop oracle, range, and anchors") {
  SeededRng rng(51);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 2 + rng.next_below(5);
    const std::size_t n = 1 + rng.next_below(5);
    std::vector<std::pair<Tensor<double>, Tensor<double>>> pairs;
    double expect = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto ca = random_vec(rng, d * d);
      auto cv = random_vec(rng, d * d);
      expect += 1.0 - oracle_flat_cosine(ca, cv);
      pairs.emplace_back(mat_tensor(ca, d), mat_tensor(cv, d));
    }
    expect /= static_cast<double>(n);
    Tensor<double> got = car_loss(pairs);
    REQUIRE(got.item() == Catch::Approx(expect).margin(1e-12));
    REQUIRE(got.item() >= 0.0 - 1e-12);
    REQUIRE(got.item() <= 2.0 + 1e-12);
  }

  auto ca = random_vec(rng, 9);
  auto cneg = ca;
  for (double& x : cneg) x = -x;
  REQUIRE(car_loss<double>({{mat_tensor(ca, 3), mat_tensor(ca, 3)},
                            {mat_tensor(cneg, 3), mat_tensor(cneg, 3)}})
              .item() == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(car_loss<double>({{mat_tensor(ca, 3), mat_tensor(cneg, 3)}}).item() ==
          Catch::Approx(2.0).margin(1e-12));
  REQUIRE_THROWS_AS(car_loss<double>({}), TensorError);
}

TEST_CASE("car_loss counts degenerate pairs and skips their gradient") {
  std::vector<double> zeros(4, 0.0);
  std::size_t degen = 0;
  Tensor<double> r = car_loss<double>({{mat_tensor(zeros, 2), mat_tensor({1, 2, 3, 4}, 2)},
                                       {mat_tensor({1, 2, 3, 4}, 2), mat_tensor({1, 2, 3, 4}, 2)}},
                                      &degen);
  REQUIRE(degen == 1);
  // Degenerate pair contributes the constant 1.
  REQUIRE(r.item() == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("triplet sampling respects the exclusion window") {
  SeededRng rng(52);
  auto triplets = make_triplet_indices(32, 2, rng);
  REQUIRE(triplets.size() == 31);
  for (const auto& t : triplets) {
    REQUIRE(t.anchor >= 1);
    REQUIRE(t.anchor <= 31);
    REQUIRE(t.negative <= 31);
    const long delta = static_cast<long>(t.negative) - static_cast<long>(t.anchor);
    REQUIRE((delta < -2 || delta > 2));
  }
}

TEST_CASE("triplet sampling is deterministic per seed") {
  SeededRng a(53), b(53), c(54);
  auto ta = make_triplet_indices(16, 2, a);
  auto tb = make_triplet_indices(16, 2, b);
  auto tc = make_triplet_indices(16, 2, c);
  bool same = true, diff = false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    same = same && ta[i].negative == tb[i].negative;
    diff = diff || ta[i].negative != tc[i].negative;
  }
  REQUIRE(same);
  REQUIRE(diff);
}

TEST_CASE("triplet sampling rejects sequences too short for the window") {
  SeededRng rng(55);
  REQUIRE_THROWS_AS(make_triplet_indices(6, 2, rng), TensorError);  // T = 2*tau + 2
  REQUIRE_NOTHROW(make_triplet_indices(7, 2, rng));                 // T = 2*tau + 3
}

TEST_CASE("negative sampling covers the full legal range") {
  // Over many draws each legal negative for a fixed anchor should appear.
  SeededRng rng(56);
  const std::size_t t = 9, tau = 2;
  std::vector<int> seen(t, 0);
  for (int rep = 0; rep < 400; ++rep) {
    auto triplets = make_triplet_indices(t, tau, rng);
    seen[triplets[3].negative]++;  // anchor i = 4, window [2, 6]
  }
  for (std::size_t j = 0; j < t; ++j) {
    if (j >= 2 && j <= 6) {
      REQUIRE(seen[j] == 0);
    } else {
      REQUIRE(seen[j] > 0);
    }
  }
}

TEST_CASE("objective gradient passes a finite-difference check") {
  const std::size_t d = 3;
  auto f = [d](Tape<double>& tape, const Tensor<double>& x) {
    Tensor<double> fa0 = slice(x, 0, d);
    Tensor<double> fa1 = slice(x, d, d);
    Tensor<double> fv0 = slice(x, 2 * d, d);
    Tensor<double> fp = slice(x, 3 * d, d);
    Tensor<double> fn = slice(x, 4 * d, d);
    (void)tape;
    CorrelationTriplet<double> t{covariance(fa0, fa1), covariance(fv0, fp), covariance(fv0, fn)};
    return tavc_objective<double>({t, t});
  };
  SeededRng rng(57);
  std::vector<double> x0(5 * d);
  for (double& v : x0) v = rng.next_gaussian();
  auto report = check_gradients(f, x0, {5 * d}, 1e-5, 1e-4);
  REQUIRE(report.pass);
}
