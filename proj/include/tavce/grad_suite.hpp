#ifndef TAVCE_GRAD_SUITE_HPP
#define TAVCE_GRAD_SUITE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tavce/correlation.hpp"
#include "tavce/encoders.hpp"
#include "tavce/grad_check.hpp"
#include "tavce/ops.hpp"
#include "tavce/training.hpp"

namespace tavce {

struct GradSuiteCase {
  std::string name;
  std::function<GradCheckReport(std::uint64_t seed)> run;
};

struct GradSuiteResult {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = false;
};

namespace gradsuite {

inline std::vector<double> random_inputs(std::uint64_t seed, std::size_t n, double margin = 0.0) {
  SeededRng rng(seed * 2654435761ULL + 17);
  std::vector<double> out(n);
  for (double& v : out) {
    double u = 2.0 * rng.next_uniform() - 1.0;
    // Keep coordinates away from kinks (relu) when a margin is requested.
    v = margin > 0.0 ? (u < 0 ? -1.0 : 1.0) * (margin + (1.0 - margin) * std::abs(u)) : u;
  }
  return out;
}

// Fixed random projection turning any tensor into a scalar loss, so that
// every output coordinate contributes to the checked gradient.
inline Tensor<double> project(const Tensor<double>& t, std::uint64_t seed) {
  SeededRng rng(seed ^ 0xABCDEF12345ULL);
  std::vector<double> w(t.size());
  for (double& v : w) v = 2.0 * rng.next_uniform() - 1.0;
  return sum(mul(t, Tensor<double>::constant(t.shape(), std::move(w))));
}

using OpBody = std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>;

inline GradCheckReport run_case(const OpBody& body, std::uint64_t seed, std::size_t n,
                                double margin, double eps = 1e-5, double tol = 1e-4) {
  return check_gradients(body, random_inputs(seed, n, margin), {n}, eps, tol);
}

}  // namespace gradsuite

// Every registered differentiable op plus the losses and the tiny-dims
// composite pipeline, each reduced to a scalar through a fixed projection.
inline std::vector<GradSuiteCase> grad_suite_cases() {
  using namespace gradsuite;
  std::vector<GradSuiteCase> cases;
  auto add_case = [&](std::string name, std::size_t n, double margin, OpBody body) {
    cases.push_back({std::move(name), [=](std::uint64_t seed) {
                       OpBody projected = [body, seed](Tape<double>& tape,
                                                       const Tensor<double>& x) {
                         return project(body(tape, x), seed);
                       };
                       return run_case(projected, seed, n, margin);
                     }});
  };

  // Elementwise suite. Two-operand ops split the packed input in half.
  auto halves = [](const Tensor<double>& x) {
    const std::size_t h = x.size() / 2;
    return std::make_pair(slice(x, 0, h), slice(x, h, h));
  };
  add_case("add", 12, 0.0, [halves](Tape<double>&, const Tensor<double>& x) {
    auto [a, b] = halves(x);
    return add(a, b);
  });
  add_case("sub", 12, 0.0, [halves](Tape<double>&, const Tensor<double>& x) {
    auto [a, b] = halves(x);
    return sub(a, b);
  });
  add_case("mul", 12, 0.0, [halves](Tape<double>&, const Tensor<double>& x) {
    auto [a, b] = halves(x);
    return mul(a, b);
  });
  add_case("div", 12, 0.3, [halves](Tape<double>&, const Tensor<double>& x) {
    auto [a, b] = halves(x);
    return div(a, b);
  });
  add_case("scale", 8, 0.0,
           [](Tape<double>&, const Tensor<double>& x) { return scale(x, 1.7); });
  add_case("add_scalar", 8, 0.0,
           [](Tape<double>&, const Tensor<double>& x) { return add_scalar(x, 0.3); });
  add_case("relu", 16, 0.05, [](Tape<double>&, const Tensor<double>& x) { return relu(x); });
  add_case("sigmoid", 16, 0.0, [](Tape<double>&, const Tensor<double>& x) { return sigmoid(x); });
  add_case("tanh", 16, 0.0, [](Tape<double>&, const Tensor<double>& x) { return tanh_op(x); });

  // Linear suite.
  add_case("matmul", 3 * 4 + 4 * 2, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    Tensor<double> a = reshape(slice(x, 0, 12), {3, 4});
    Tensor<double> b = reshape(slice(x, 12, 8), {4, 2});
    return matmul(a, b);
  });
  add_case("conv1x1", 3 * 4 * 4 + 2 * 3 + 2, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    Tensor<double> map = reshape(slice(x, 0, 48), {3, 4, 4});
    Tensor<double> w = reshape(slice(x, 48, 6), {2, 3});
    Tensor<double> b = slice(x, 54, 2);
    return conv1x1(map, w, &b);
  });
  add_case("conv3x3_s1", 2 * 4 * 4 + 2 * 2 * 9 + 2, 0.0,
           [](Tape<double>&, const Tensor<double>& x) {
             Tensor<double> map = reshape(slice(x, 0, 32), {2, 4, 4});
             Tensor<double> w = reshape(slice(x, 32, 36), {2, 2, 3, 3});
             Tensor<double> b = slice(x, 68, 2);
             return conv3x3(map, w, &b, 1);
           });
  add_case("conv3x3_s2", 2 * 4 * 4 + 2 * 2 * 9 + 2, 0.0,
           [](Tape<double>&, const Tensor<double>& x) {
             Tensor<double> map = reshape(slice(x, 0, 32), {2, 4, 4});
             Tensor<double> w = reshape(slice(x, 32, 36), {2, 2, 3, 3});
             Tensor<double> b = slice(x, 68, 2);
             return conv3x3(map, w, &b, 2);
           });
  add_case("upsample2x", 2 * 3 * 3, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    return upsample2x(reshape(x, {2, 3, 3}));
  });

  // Reductions.
  add_case("sum", 9, 0.0, [](Tape<double>&, const Tensor<double>& x) { return sum(x); });
  add_case("mean", 9, 0.0, [](Tape<double>&, const Tensor<double>& x) { return mean(x); });
  add_case("sum_axis0", 12, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    return sum_axis0(reshape(x, {3, 4}));
  });
  add_case("l2_norm", 9, 0.05, [](Tape<double>&, const Tensor<double>& x) { return l2_norm(x); });

  // Shape ops.
  add_case("reshape", 12, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    return reshape(x, {3, 4});
  });
  add_case("slice", 12, 0.0,
           [](Tape<double>&, const Tensor<double>& x) { return slice(x, 3, 6); });
  add_case("concat_channels", 2 * 2 * 2 + 3 * 2 * 2, 0.0,
           [](Tape<double>&, const Tensor<double>& x) {
             Tensor<double> a = reshape(slice(x, 0, 8), {2, 2, 2});
             Tensor<double> b = reshape(slice(x, 8, 12), {3, 2, 2});
             return concat_channels(a, b);
           });
  add_case("broadcast_spatial", 5, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    return broadcast_spatial(x, 3, 2);
  });

  // Correlation machinery.
  add_case("covariance", 10, 0.0, [halves](Tape<double>&, const Tensor<double>& x) {
    auto [a, b] = halves(x);
    return covariance(a, b);
  });
  add_case("flat_cosine", 18, 0.0, [halves](Tape<double>&, const Tensor<double>& x) {
    auto [a, b] = halves(x);
    return flat_cosine(reshape(a, {3, 3}), reshape(b, {3, 3}));
  });
  add_case("tavc_triplet_loss", 27, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    Tensor<double> ca = reshape(slice(x, 0, 9), {3, 3});
    Tensor<double> cp = reshape(slice(x, 9, 9), {3, 3});
    Tensor<double> cn = reshape(slice(x, 18, 9), {3, 3});
    return tavc_triplet_loss(ca, cp, cn);
  });
  // L_tavc: the summed objective over a two-triplet batch of covariances
  // computed from raw embeddings.
  add_case("tavc_objective", 5 * 5, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    std::vector<Tensor<double>> f;
    for (std::size_t i = 0; i < 5; ++i) f.push_back(slice(x, i * 5, 5));
    std::vector<CorrelationTriplet<double>> batch;
    batch.push_back({covariance(f[0], f[1]), covariance(f[1], f[2]), covariance(f[1], f[3])});
    batch.push_back({covariance(f[1], f[2]), covariance(f[2], f[3]), covariance(f[2], f[4])});
    return tavc_objective(batch);
  });
  // L_reg over two pairs of covariances from raw embeddings.
  add_case("car_loss", 4 * 5, 0.0, [](Tape<double>&, const Tensor<double>& x) {
    std::vector<Tensor<double>> f;
    for (std::size_t i = 0; i < 4; ++i) f.push_back(slice(x, i * 5, 5));
    std::vector<std::pair<Tensor<double>, Tensor<double>>> pairs;
    pairs.emplace_back(covariance(f[0], f[1]), covariance(f[2], f[3]));
    pairs.emplace_back(covariance(f[1], f[2]), covariance(f[3], f[0]));
    return car_loss(pairs);
  });

  // Encoders, checked against both params and inputs at tiny dims.
  const Dims tiny{8, 4, 8, 16};
  auto tiny_params = [tiny](Tape<double>& tape, std::uint64_t seed) {
    return init_params<double>(&tape, seed + 101, tiny);
  };
  cases.push_back({"audio_encode", [tiny, tiny_params](std::uint64_t seed) {
    OpBody body = [tiny, tiny_params, seed](Tape<double>& tape, const Tensor<double>& x) {
      ModelParams<double> p = tiny_params(tape, seed);
      return gradsuite::project(audio_encode(p, x), seed);
    };
    return gradsuite::run_case(body, seed, tiny.a_dim, 0.02);
  }});
  cases.push_back({"visual_encode", [tiny, tiny_params](std::uint64_t seed) {
    OpBody body = [tiny, tiny_params, seed](Tape<double>& tape, const Tensor<double>& x) {
      ModelParams<double> p = tiny_params(tape, seed);
      return gradsuite::project(visual_encode(p, x), seed);
    };
    return gradsuite::run_case(body, seed, tiny.img * tiny.img, 0.02);
  }});
  cases.push_back({"extract_feature_map", [tiny, tiny_params](std::uint64_t seed) {
    OpBody body = [tiny, tiny_params, seed](Tape<double>& tape, const Tensor<double>& x) {
      ModelParams<double> p = tiny_params(tape, seed);
      return gradsuite::project(extract_feature_map(p, reshape(x, {1, tiny.img, tiny.img})), seed);
    };
    return gradsuite::run_case(body, seed, tiny.img * tiny.img, 0.02);
  }});
  cases.push_back({"cerl_fuse", [tiny, tiny_params](std::uint64_t seed) {
    const std::size_t hw = tiny.map_side() * tiny.map_side();
    const std::size_t n = tiny.c * hw + tiny.d * tiny.d;
    OpBody body = [tiny, tiny_params, seed, hw](Tape<double>& tape, const Tensor<double>& x) {
      ModelParams<double> p = tiny_params(tape, seed);
      Tensor<double> f = reshape(slice(x, 0, tiny.c * hw), {tiny.c, tiny.map_side(),
                                                            tiny.map_side()});
      Tensor<double> c_a = reshape(slice(x, tiny.c * hw, tiny.d * tiny.d), {tiny.d, tiny.d});
      return gradsuite::project(cerl_fuse(p, f, c_a), seed);
    };
    return gradsuite::run_case(body, seed, n, 0.02);
  }});
  cases.push_back({"render_frame", [tiny, tiny_params](std::uint64_t seed) {
    const std::size_t hw = tiny.map_side() * tiny.map_side();
    const std::size_t n = tiny.c * hw + tiny.d;
    OpBody body = [tiny, tiny_params, seed, hw](Tape<double>& tape, const Tensor<double>& x) {
      ModelParams<double> p = tiny_params(tape, seed);
      Tensor<double> g = reshape(slice(x, 0, tiny.c * hw), {tiny.c, tiny.map_side(),
                                                            tiny.map_side()});
      Tensor<double> f_a = slice(x, tiny.c * hw, tiny.d);
      // Pixel-MSE against a fixed target exercises the whole G stack.
      SeededRng trng(seed + 7);
      std::vector<double> tgt(tiny.img * tiny.img);
      for (double& v : tgt) v = trng.next_uniform();
      return mse(render_frame(p, g, f_a),
                 Tensor<double>::constant({1, tiny.img, tiny.img}, std::move(tgt)));
    };
    return gradsuite::run_case(body, seed, n, 0.02);
  }});

  // Full stage-2 composite loss (render + lambda * CAR) at tiny dims,
  // differentiated through the inputs of the whole chain.
  cases.push_back({"stage2_composite_loss", [tiny, tiny_params](std::uint64_t seed) {
    const std::size_t pix = tiny.img * tiny.img;
    const std::size_t n = pix + 2 * tiny.a_dim;
    OpBody body = [tiny, tiny_params, seed, pix](Tape<double>& tape, const Tensor<double>& x) {
      ModelParams<double> p = tiny_params(tape, seed);
      Tensor<double> v0 = reshape(slice(x, 0, pix), {1, tiny.img, tiny.img});
      Tensor<double> a_prev = slice(x, pix, tiny.a_dim);
      Tensor<double> a_cur = slice(x, pix + tiny.a_dim, tiny.a_dim);
      Tensor<double> c_a = covariance(audio_encode(p, a_prev), audio_encode(p, a_cur));
      Tensor<double> generated = stage2_forward(p, v0, c_a, audio_encode(p, a_cur), true);
      SeededRng trng(seed + 13);
      std::vector<double> tgt(pix);
      for (double& v : tgt) v = trng.next_uniform();
      Tensor<double> render_loss =
          mse(generated, Tensor<double>::constant({1, tiny.img, tiny.img}, std::move(tgt)));
      // The identity frame doubles as the previous real frame for CAR.
      Tensor<double> prev_emb = visual_encode(p, reshape(v0, {pix}));
      Tensor<double> gen_emb = visual_encode(p, reshape(generated, {pix}));
      Tensor<double> reg = car_loss<double>({{c_a, covariance(prev_emb, gen_emb)}});
      return add(render_loss, scale(reg, 1.0));
    };
    return gradsuite::run_case(body, seed, n, 0.02);
  }});

  return cases;
}

inline std::vector<GradSuiteResult> run_grad_suite(const std::vector<std::uint64_t>& seeds) {
  std::vector<GradSuiteResult> results;
  for (const GradSuiteCase& c : grad_suite_cases()) {
    GradSuiteResult r;
    r.name = c.name;
    r.pass = true;
    for (std::uint64_t seed : seeds) {
      GradCheckReport rep = c.run(seed);
      r.max_rel_error = std::max(r.max_rel_error, rep.max_rel_error);
      r.pass = r.pass && rep.pass;
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace tavce

#endif  // TAVCE_GRAD_SUITE_HPP
