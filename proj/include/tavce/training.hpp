#ifndef TAVCE_TRAINING_HPP
#define TAVCE_TRAINING_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tavce/correlation.hpp"
#include "tavce/crc32.hpp"
#include "tavce/encoders.hpp"
#include "tavce/io.hpp"
#include "tavce/ops.hpp"
#include "tavce/synthdata.hpp"
#include "tavce/tensor.hpp"

namespace tavce {

struct TrainConfig {
  std::uint8_t stage = 1;
  std::uint32_t iterations = 2000;  // stage-2 default is 1500
  float learning_rate = 1e-4f;      // stage-2 default is 2e-4
  std::uint32_t batch_sequences = 4;
  std::uint32_t tau = 2;
  float lambda_reg = 1.0f;
  bool use_cerl = true;
  bool use_car = true;
  std::uint64_t seed = 0;
  Dims dims;

  void validate() const {
    if (stage != 1 && stage != 2) throw TensorError("train config: stage must be 1 or 2");
    if (iterations == 0) throw TensorError("train config: iterations must be positive");
    if (!(learning_rate > 0)) throw TensorError("train config: learning rate must be positive");
    if (batch_sequences == 0) throw TensorError("train config: batch_sequences must be positive");
    if (lambda_reg < 0) throw TensorError("train config: lambda_reg must be >= 0");
    dims.validate();
  }
};

struct LossRecord {
  std::uint32_t iter;
  double total;
  double render;
  double reg;
};

inline std::string format_loss_log(const std::vector<LossRecord>& log) {
  std::ostringstream out;
  out.precision(17);
  for (const LossRecord& r : log) {
    out << r.iter << '\t' << r.total << '\t' << r.render << '\t' << r.reg << '\n';
  }
  return out.str();
}

// Stage-1 PRNG stream offset: keeps metric-training streams disjoint from
// data-generator streams when both are driven by the same user seed.
inline constexpr std::uint64_t kStage1SeedOffset = 20;

// ------------------------------- Adam --------------------------------------

inline constexpr float kAdamBeta1 = 0.9f;
inline constexpr float kAdamBeta2 = 0.999f;
inline constexpr float kAdamEps = 1e-8f;

struct AdamState {
  std::map<std::string, std::vector<float>> m;
  std::map<std::string, std::vector<float>> v;
  std::uint64_t step = 0;
};

// Standard Adam with bias correction, applied to the named trainable subset.
// Frozen tensors are untouched.
inline void adam_step(ModelParams<float>& params, const std::vector<std::string>& trainable,
                      AdamState& state, float lr) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const float corr1 = 1.0f - static_cast<float>(std::pow(kAdamBeta1, t));
  const float corr2 = 1.0f - static_cast<float>(std::pow(kAdamBeta2, t));
  for (const std::string& name : trainable) {
    Tensor<float>& p = params.at(name);
    if (!p.requires_grad() || p.grad().size() != p.size()) {
      throw TensorError("adam_step: missing gradient for tensor '" + name + "'");
    }
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) m.assign(p.size(), 0.0f);
    if (v.empty()) v.assign(p.size(), 0.0f);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const float g = p.grad()[i];
      if (!std::isfinite(g)) {
        throw TensorError("adam_step: non-finite gradient in tensor '" + name + "'");
      }
      m[i] = kAdamBeta1 * m[i] + (1.0f - kAdamBeta1) * g;
      v[i] = kAdamBeta2 * v[i] + (1.0f - kAdamBeta2) * g * g;
      const float m_hat = m[i] / corr1;
      const float v_hat = v[i] / corr2;
      p.value()[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

// ----------------------------- Checkpoint ----------------------------------
// "TVCE" | u32 version=1 | u8 stage | TrainConfig fields (u32 iterations,
// f32 lr, u32 batch_sequences, u32 tau, f32 lambda_reg, u8 use_cerl,
// u8 use_car, u64 seed, u32 A_dim, u32 D, u32 C, u32 img) | u32 tensor count |
// per tensor: u16 name length, name, u8 rank, u32 dims[], u8 dtype (0=f32),
// raw LE payload | u32 CRC32 over everything after the magic.

inline constexpr std::uint32_t kTvceVersion = 1;

struct Checkpoint {
  std::uint8_t stage = 1;
  TrainConfig config;
  std::map<std::string, std::pair<Shape, std::vector<float>>> tensors;
};

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.str("TVCE");
  w.u32(kTvceVersion);
  w.u8(ckpt.stage);
  const TrainConfig& c = ckpt.config;
  w.u32(c.iterations);
  w.f32(c.learning_rate);
  w.u32(c.batch_sequences);
  w.u32(c.tau);
  w.f32(c.lambda_reg);
  w.u8(c.use_cerl ? 1 : 0);
  w.u8(c.use_car ? 1 : 0);
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.dims.a_dim));
  w.u32(static_cast<std::uint32_t>(c.dims.d));
  w.u32(static_cast<std::uint32_t>(c.dims.c));
  w.u32(static_cast<std::uint32_t>(c.dims.img));
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, entry] : ckpt.tensors) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.str(name);
    w.u8(static_cast<std::uint8_t>(entry.first.size()));
    for (std::size_t d : entry.first) w.u32(static_cast<std::uint32_t>(d));
    w.u8(0);  // dtype f32
    for (float v : entry.second) w.f32(v);
  }
  std::vector<std::uint8_t> out = w.data();
  const std::uint32_t crc = Crc32::of(out.data() + 4, out.size() - 4);
  ByteWriter tail;
  tail.u32(crc);
  out.insert(out.end(), tail.data().begin(), tail.data().end());
  return out;
}

inline Checkpoint parse_checkpoint(std::vector<std::uint8_t> bytes) {
  if (bytes.size() < 8) throw IoError("not a TVCE file: too short");
  ByteReader r(std::move(bytes));
  if (r.str(4) != "TVCE") throw IoError("not a TVCE file: bad magic");
  const std::size_t payload_end = r.size() - 4;
  const std::uint32_t stored_crc = [&] {
    ByteReader tail(std::vector<std::uint8_t>(r.data().end() - 4, r.data().end()));
    return tail.u32();
  }();
  if (stored_crc != Crc32::of(r.data().data() + 4, payload_end - 4)) {
    throw IoError("TVCE CRC mismatch: checkpoint is corrupt");
  }
  const std::uint32_t version = r.u32();
  if (version != kTvceVersion) throw IoError("unsupported TVCE version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.stage = r.u8();
  TrainConfig& c = ckpt.config;
  c.stage = ckpt.stage;
  c.iterations = r.u32();
  c.learning_rate = r.f32();
  c.batch_sequences = r.u32();
  c.tau = r.u32();
  c.lambda_reg = r.f32();
  c.use_cerl = r.u8() != 0;
  c.use_car = r.u8() != 0;
  c.seed = r.u64();
  c.dims.a_dim = r.u32();
  c.dims.d = r.u32();
  c.dims.c = r.u32();
  c.dims.img = r.u32();
  const std::uint32_t count = r.u32();
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::uint8_t dtype = r.u8();
    if (dtype != 0) throw IoError("TVCE tensor '" + name + "': unsupported dtype");
    std::vector<float> data(numel(shape));
    for (float& v : data) v = r.f32();
    if (!ckpt.tensors.emplace(name, std::make_pair(std::move(shape), std::move(data))).second) {
      throw IoError("TVCE tensor '" + name + "' appears more than once");
    }
  }
  if (r.pos() != payload_end) throw IoError("TVCE file has trailing garbage");

  // Model tensors must exactly match the architecture the header declares.
  for (const auto& [name, shape, fan_in] : param_specs(c.dims)) {
    (void)fan_in;
    const bool metric = is_metric_param(name);
    if (ckpt.stage == 1 && !metric) continue;
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw IoError("TVCE checkpoint missing tensor '" + name + "'");
    if (it->second.first != shape) {
      throw IoError("TVCE tensor '" + name + "' has shape " + shape_str(it->second.first) +
                    ", expected " + shape_str(shape));
    }
  }
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  atomic_write_file(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_file(path));
}

// Rebuilds parameter tensors from a checkpoint. Stage-1 checkpoints carry the
// metric tensors only; anything absent stays out of the returned map.
inline ModelParams<float> params_from_checkpoint(const Checkpoint& ckpt, Tape<float>* tape,
                                                 bool trainable) {
  ModelParams<float> p;
  p.dims = ckpt.config.dims;
  for (const auto& [name, shape, fan_in] : param_specs(p.dims)) {
    (void)fan_in;
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) continue;
    p.tensors.emplace(name, Tensor<float>::leaf(tape, it->second.first, it->second.second,
                                                trainable));
  }
  return p;
}

// ------------------------- Shared forward pieces ---------------------------

inline Tensor<float> make_audio_tensor(const SequenceSample& s, std::size_t t, const Dims& dims) {
  return Tensor<float>::constant({dims.a_dim}, s.audio_at(t, dims.a_dim));
}

inline Tensor<float> make_frame_tensor(const SequenceSample& s, std::size_t t) {
  return Tensor<float>::constant({1, kFrameSide, kFrameSide}, s.frame_at(t));
}

// Stage-2 generation path: feature-extract the identity frame, optionally
// fuse with the audio correlation, render conditioned on the current audio
// embedding.
template <typename T>
Tensor<T> stage2_forward(const ModelParams<T>& params, const Tensor<T>& identity_frame,
                         const Tensor<T>& c_a, const Tensor<T>& audio_embedding, bool use_cerl) {
  Tensor<T> f = extract_feature_map(params, identity_frame);
  Tensor<T> g = use_cerl ? cerl_fuse(params, f, c_a) : f;
  return render_frame(params, g, audio_embedding);
}

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> log;
};

namespace detail {

inline std::vector<std::string> metric_param_names(const Dims& dims) {
  std::vector<std::string> out;
  for (const auto& [name, shape, fan_in] : param_specs(dims)) {
    if (is_metric_param(name)) out.push_back(name);
  }
  return out;
}

inline std::vector<std::string> generator_param_names(const Dims& dims) {
  std::vector<std::string> out;
  for (const auto& [name, shape, fan_in] : param_specs(dims)) {
    if (!is_metric_param(name)) out.push_back(name);
  }
  return out;
}

inline void store_training_state(Checkpoint& ckpt, const ModelParams<float>& params,
                                 const std::vector<std::string>& names, const AdamState& adam) {
  for (const std::string& name : names) {
    const Tensor<float>& t = params.at(name);
    ckpt.tensors[name] = {t.shape(), t.value()};
    auto mi = adam.m.find(name);
    auto vi = adam.v.find(name);
    ckpt.tensors["adam.m." + name] = {t.shape(), mi != adam.m.end() ? mi->second
                                                                    : std::vector<float>(t.size(), 0.0f)};
    ckpt.tensors["adam.v." + name] = {t.shape(), vi != adam.v.end() ? vi->second
                                                                    : std::vector<float>(t.size(), 0.0f)};
  }
  ckpt.tensors["adam.step"] = {Shape{1}, {static_cast<float>(adam.step)}};
}

}  // namespace detail

// Stage 1: pre-train the TAVC metric. Per iteration, sample batch_sequences
// sequences, resample one tau-window triplet per anchor, and minimize the
// mean over sequences of the per-sequence triplet-loss sums.
inline TrainResult train_stage1(const std::vector<SequenceSample>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.stage != 1) throw TensorError("train_stage1: config stage must be 1");
  if (data.empty()) throw TensorError("train_stage1: empty dataset");
  const std::size_t t = data[0].frames_count;
  if (t < 2 * static_cast<std::size_t>(cfg.tau) + 3) {
    throw TensorError("train_stage1: sequences too short for tau=" + std::to_string(cfg.tau));
  }

  Tape<float> tape;
  // Offset the user seed so metric training never shares PRNG streams with a
  // data generator driven by the same seed value.
  const std::uint64_t stream_seed = cfg.seed + kStage1SeedOffset;
  ModelParams<float> params = init_params<float>(&tape, stream_seed, cfg.dims);
  const std::vector<std::string> trainable = detail::metric_param_names(cfg.dims);
  AdamState adam;
  SeededRng rng = SeededRng::derive(stream_seed, 1);
  std::vector<LossRecord> log;
  log.reserve(cfg.iterations);

  for (std::uint32_t iter = 0; iter < cfg.iterations; ++iter) {
    try {
      params.zero_grads();
      Tensor<float> batch_loss;
      for (std::uint32_t b = 0; b < cfg.batch_sequences; ++b) {
        const SequenceSample& s = data[rng.next_below(data.size())];
        auto triplets = make_triplet_indices(t, cfg.tau, rng);
        std::vector<Tensor<float>> fa(t), fv(t);
        for (std::size_t k = 0; k < t; ++k) {
          fa[k] = audio_encode(params, make_audio_tensor(s, k, cfg.dims));
          fv[k] = visual_encode(params, reshape(make_frame_tensor(s, k),
                                                {cfg.dims.img * cfg.dims.img}));
        }
        std::vector<CorrelationTriplet<float>> batch;
        batch.reserve(triplets.size());
        for (const TripletIndex& ti : triplets) {
          batch.push_back({covariance(fa[ti.anchor - 1], fa[ti.anchor]),
                           covariance(fv[ti.anchor - 1], fv[ti.anchor]),
                           covariance(fv[ti.anchor - 1], fv[ti.negative])});
        }
        Tensor<float> seq_loss = tavc_objective(batch);
        batch_loss = b == 0 ? seq_loss : add(batch_loss, seq_loss);
      }
      Tensor<float> loss = scale(batch_loss, 1.0f / static_cast<float>(cfg.batch_sequences));
      log.push_back({iter, static_cast<double>(loss.item()), 0.0, 0.0});
      tape.backward(loss);
      adam_step(params, trainable, adam, cfg.learning_rate);
    } catch (const TensorError& e) {
      throw TensorError("train_stage1 aborted at iteration " + std::to_string(iter) + ": " +
                        e.what());
    }
  }

  Checkpoint ckpt;
  ckpt.stage = 1;
  ckpt.config = cfg;
  detail::store_training_state(ckpt, params, trainable, adam);
  return {std::move(ckpt), std::move(log)};
}

// Stage 2: train E_f, CERL and G against reconstruction plus (optionally)
// correlation-aware regularization, with the stage-1 metric frozen. One
// (sequence, anchor) draw is one optimizer step.
inline TrainResult train_stage2(const std::vector<SequenceSample>& data,
                                const Checkpoint& metric_ckpt, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.stage != 2) throw TensorError("train_stage2: config stage must be 2");
  if (metric_ckpt.stage != 1) throw TensorError("train_stage2: metric checkpoint is not stage 1");
  if (data.empty()) throw TensorError("train_stage2: empty dataset");
  const std::size_t t = data[0].frames_count;
  if (t < 2) throw TensorError("train_stage2: sequences too short");

  Tape<float> tape;
  ModelParams<float> params = init_params<float>(&tape, cfg.seed, cfg.dims);
  // Overwrite the metric weights from the stage-1 checkpoint and freeze them.
  for (const std::string& name : detail::metric_param_names(cfg.dims)) {
    auto it = metric_ckpt.tensors.find(name);
    if (it == metric_ckpt.tensors.end()) {
      throw TensorError("train_stage2: metric checkpoint missing tensor '" + name + "'");
    }
    if (it->second.first != params.at(name).shape()) {
      throw TensorError("train_stage2: tensor '" + name + "' has shape " +
                        shape_str(it->second.first) + ", expected " +
                        shape_str(params.at(name).shape()));
    }
    params.tensors[name] = Tensor<float>::leaf(&tape, it->second.first, it->second.second, false);
  }
  const std::vector<std::string> trainable = detail::generator_param_names(cfg.dims);
  AdamState adam;
  SeededRng rng = SeededRng::derive(cfg.seed, 2);
  std::vector<LossRecord> log;
  log.reserve(cfg.iterations);

  for (std::uint32_t iter = 0; iter < cfg.iterations; ++iter) {
    try {
      params.zero_grads();
      const SequenceSample& s = data[rng.next_below(data.size())];
      const std::size_t anchor = 1 + rng.next_below(t - 1);
      std::size_t identity = rng.next_below(t - 1);
      if (identity >= anchor) ++identity;  // uniform over {0..T-1} \ {anchor}

      Tensor<float> c_a = covariance(audio_encode(params, make_audio_tensor(s, anchor - 1, cfg.dims)),
                                     audio_encode(params, make_audio_tensor(s, anchor, cfg.dims)));
      Tensor<float> audio_emb = audio_encode(params, make_audio_tensor(s, anchor, cfg.dims));
      Tensor<float> generated =
          stage2_forward(params, make_frame_tensor(s, identity), c_a, audio_emb, cfg.use_cerl);
      Tensor<float> target = make_frame_tensor(s, anchor);
      Tensor<float> render_loss = mse(generated, target);

      Tensor<float> total = render_loss;
      double reg_value = 0.0;
      if (cfg.use_car) {
        const std::size_t pix = cfg.dims.img * cfg.dims.img;
        Tensor<float> prev_emb =
            visual_encode(params, reshape(make_frame_tensor(s, anchor - 1), {pix}));
        Tensor<float> gen_emb = visual_encode(params, reshape(generated, {pix}));
        Tensor<float> c_v_gen = covariance(prev_emb, gen_emb);
        Tensor<float> reg = car_loss<float>({{c_a, c_v_gen}});
        reg_value = static_cast<double>(reg.item());
        total = add(render_loss, scale(reg, cfg.lambda_reg));
      }
      log.push_back({iter, static_cast<double>(total.item()),
                     static_cast<double>(render_loss.item()), reg_value});
      tape.backward(total);
      adam_step(params, trainable, adam, cfg.learning_rate);
    } catch (const TensorError& e) {
      throw TensorError("train_stage2 aborted at iteration " + std::to_string(iter) + ": " +
                        e.what());
    }
  }

  Checkpoint ckpt;
  ckpt.stage = 2;
  ckpt.config = cfg;
  detail::store_training_state(ckpt, params, trainable, adam);
  // Echo the frozen metric tensors so the checkpoint is self-contained.
  for (const std::string& name : detail::metric_param_names(cfg.dims)) {
    const Tensor<float>& p = params.at(name);
    ckpt.tensors[name] = {p.shape(), p.value()};
  }
  return {std::move(ckpt), std::move(log)};
}

}  // namespace tavce

#endif  // TAVCE_TRAINING_HPP
