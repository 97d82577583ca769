#ifndef TAVCE_EVALUATION_HPP
#define TAVCE_EVALUATION_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>
#include <string>
#include <vector>

#include "tavce/correlation.hpp"
#include "tavce/encoders.hpp"
#include "tavce/synthdata.hpp"
#include "tavce/training.hpp"

namespace tavce {

struct SeparationReport {
  double mean_pos_cosine = 0.0;
  double mean_neg_cosine = 0.0;
  double separation = 0.0;  // mean_pos - mean_neg
  std::size_t num_pos = 0;
  std::size_t num_neg = 0;
  std::size_t degenerate_count = 0;
};

struct EvalReport {
  SeparationReport separation;
  double retrieval_top1 = 0.0;
  double chance_level = 0.0;
  bool has_reconstruction = false;
  double mse = 0.0;
  double psnr = 0.0;
  double temporal_consistency = 0.0;
  std::string config_echo;
};

// Held-out split: the last 20% of sequences (by position in the file).
inline std::pair<std::vector<SequenceSample>, std::vector<SequenceSample>> split_dataset(
    const std::vector<SequenceSample>& all) {
  const std::size_t held = all.size() / 5;
  const std::size_t train_count = all.size() - held;
  std::vector<SequenceSample> train(all.begin(), all.begin() + static_cast<long>(train_count));
  std::vector<SequenceSample> eval(all.begin() + static_cast<long>(train_count), all.end());
  return {std::move(train), std::move(eval)};
}

namespace detail {

// All audio and visual embeddings of one sequence, forward-only.
struct SequenceEmbeddings {
  std::vector<Tensor<float>> audio;
  std::vector<Tensor<float>> visual;
};

inline SequenceEmbeddings embed_sequence(const ModelParams<float>& params,
                                         const SequenceSample& s) {
  const std::size_t t = s.frames_count;
  const std::size_t pix = params.dims.img * params.dims.img;
  SequenceEmbeddings out;
  out.audio.reserve(t);
  out.visual.reserve(t);
  for (std::size_t k = 0; k < t; ++k) {
    out.audio.push_back(audio_encode(params, make_audio_tensor(s, k, params.dims)));
    out.visual.push_back(visual_encode(params, reshape(make_frame_tensor(s, k), {pix})));
  }
  return out;
}

inline double cosine_value(const Tensor<float>& a, const Tensor<float>& b, bool* degenerate) {
  return static_cast<double>(flat_cosine(a, b, degenerate).item());
}

}  // namespace detail

// Positive vs negative cosine separation over a held-out split. Negatives are
// enumerated exhaustively over every legal j outside [i - tau, i + tau].
inline SeparationReport separation_stats(const std::vector<SequenceSample>& data,
                                         const Checkpoint& ckpt, std::size_t tau) {
  if (data.empty()) throw TensorError("separation_stats: empty dataset");
  ModelParams<float> params = params_from_checkpoint(ckpt, nullptr, false);
  SeparationReport rep;
  double pos_sum = 0.0, neg_sum = 0.0;
  for (const SequenceSample& s : data) {
    const std::size_t t = s.frames_count;
    auto emb = detail::embed_sequence(params, s);
    for (std::size_t i = 1; i < t; ++i) {
      Tensor<float> c_a = covariance(emb.audio[i - 1], emb.audio[i]);
      bool degen = false;
      pos_sum += detail::cosine_value(c_a, covariance(emb.visual[i - 1], emb.visual[i]), &degen);
      if (degen) ++rep.degenerate_count;
      ++rep.num_pos;
      const std::size_t lo = i >= tau ? i - tau : 0;
      const std::size_t hi = i + tau;
      for (std::size_t j = 0; j < t; ++j) {
        if (j >= lo && j <= hi) continue;
        neg_sum += detail::cosine_value(c_a, covariance(emb.visual[i - 1], emb.visual[j]), &degen);
        if (degen) ++rep.degenerate_count;
        ++rep.num_neg;
      }
    }
  }
  rep.mean_pos_cosine = pos_sum / static_cast<double>(rep.num_pos);
  rep.mean_neg_cosine = neg_sum / static_cast<double>(rep.num_neg);
  rep.separation = rep.mean_pos_cosine - rep.mean_neg_cosine;
  return rep;
}

// Adjacent-frame retrieval: the query c^a_{i-1,i} ranks candidates
// c^v_{i-1,j} over all j != i-1; a hit is argmax at j = i. Ties break toward
// the lower j.
inline std::pair<double, double> retrieval_accuracy(const std::vector<SequenceSample>& data,
                                                    const Checkpoint& ckpt) {
  if (data.empty()) throw TensorError("retrieval_accuracy: empty dataset");
  ModelParams<float> params = params_from_checkpoint(ckpt, nullptr, false);
  std::size_t hits = 0, total = 0;
  double chance = 0.0;
  for (const SequenceSample& s : data) {
    const std::size_t t = s.frames_count;
    chance = 1.0 / static_cast<double>(t - 1);
    auto emb = detail::embed_sequence(params, s);
    for (std::size_t i = 1; i < t; ++i) {
      Tensor<float> c_a = covariance(emb.audio[i - 1], emb.audio[i]);
      double best = -2.0;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < t; ++j) {
        if (j == i - 1) continue;
        const double score =
            detail::cosine_value(c_a, covariance(emb.visual[i - 1], emb.visual[j]), nullptr);
        if (score > best) {
          best = score;
          best_j = j;
        }
      }
      if (best_j == i) ++hits;
      ++total;
    }
  }
  return {static_cast<double>(hits) / static_cast<double>(total), chance};
}

struct ReconstructionMetrics {
  double mse = 0.0;
  double psnr = 0.0;
  double temporal_consistency = 0.0;
};

// Regenerates every frame i >= 1 along the stage-2 forward path with frame 0
// as the identity frame, then scores pixel error and the mean cosine between
// audio correlations and generated-frame correlations.
inline ReconstructionMetrics reconstruction_metrics(const std::vector<SequenceSample>& data,
                                                    const Checkpoint& ckpt) {
  if (data.empty()) throw TensorError("reconstruction_metrics: empty dataset");
  if (ckpt.stage != 2) throw TensorError("reconstruction_metrics: expected a stage-2 checkpoint");
  ModelParams<float> params = params_from_checkpoint(ckpt, nullptr, false);
  const bool use_cerl = ckpt.config.use_cerl;
  const std::size_t pix = params.dims.img * params.dims.img;
  double err_sum = 0.0, cos_sum = 0.0;
  std::size_t pixel_count = 0, pair_count = 0;
  for (const SequenceSample& s : data) {
    const std::size_t t = s.frames_count;
    Tensor<float> identity = make_frame_tensor(s, 0);
    for (std::size_t i = 1; i < t; ++i) {
      Tensor<float> c_a =
          covariance(audio_encode(params, make_audio_tensor(s, i - 1, params.dims)),
                     audio_encode(params, make_audio_tensor(s, i, params.dims)));
      Tensor<float> audio_emb = audio_encode(params, make_audio_tensor(s, i, params.dims));
      Tensor<float> generated = stage2_forward(params, identity, c_a, audio_emb, use_cerl);
      const std::vector<float> target = s.frame_at(i);
      for (std::size_t p = 0; p < target.size(); ++p) {
        const double d = static_cast<double>(generated.value()[p]) - target[p];
        err_sum += d * d;
      }
      pixel_count += target.size();
      Tensor<float> prev_emb =
          visual_encode(params, reshape(make_frame_tensor(s, i - 1), {pix}));
      Tensor<float> gen_emb = visual_encode(params, reshape(generated, {pix}));
      cos_sum += detail::cosine_value(c_a, covariance(prev_emb, gen_emb), nullptr);
      ++pair_count;
    }
  }
  ReconstructionMetrics m;
  m.mse = err_sum / static_cast<double>(pixel_count);
  m.psnr = m.mse > 0 ? 10.0 * std::log10(1.0 / m.mse) : std::numeric_limits<double>::infinity();
  m.temporal_consistency = cos_sum / static_cast<double>(pair_count);
  return m;
}

inline std::string format_eval_report(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "mean_pos_cosine=" << r.separation.mean_pos_cosine << '\n'
      << "mean_neg_cosine=" << r.separation.mean_neg_cosine << '\n'
      << "separation=" << r.separation.separation << '\n'
      << "num_pos=" << r.separation.num_pos << '\n'
      << "num_neg=" << r.separation.num_neg << '\n'
      << "degenerate_count=" << r.separation.degenerate_count << '\n'
      << "retrieval_top1=" << r.retrieval_top1 << '\n'
      << "chance_level=" << r.chance_level << '\n';
  if (r.has_reconstruction) {
    out << "mse=" << r.mse << '\n'
        << "psnr=" << r.psnr << '\n'
        << "temporal_consistency=" << r.temporal_consistency << '\n';
  }
  out << r.config_echo;
  return out.str();
}

struct AblationCell {
  bool use_cerl = false;
  bool use_car = false;
  TrainResult result;
  ReconstructionMetrics metrics;
};

struct AblationGrid {
  std::vector<AblationCell> cells;  // order: (off,off), (off,on), (on,off), (on,on)
};

// Trains the 2x2 {CERL, CAR} grid from one stage-1 checkpoint with a shared
// seed, then evaluates each cell on the held-out split.
inline AblationGrid run_ablation(const std::vector<SequenceSample>& train_data,
                                 const std::vector<SequenceSample>& eval_data,
                                 const Checkpoint& metric_ckpt, const TrainConfig& base_cfg) {
  AblationGrid grid;
  for (int cerl = 0; cerl <= 1; ++cerl) {
    for (int car = 0; car <= 1; ++car) {
      TrainConfig cfg = base_cfg;
      cfg.stage = 2;
      cfg.use_cerl = cerl != 0;
      cfg.use_car = car != 0;
      AblationCell cell;
      cell.use_cerl = cfg.use_cerl;
      cell.use_car = cfg.use_car;
      try {
        cell.result = train_stage2(train_data, metric_ckpt, cfg);
      } catch (const TensorError& e) {
        throw TensorError("ablation cell (cerl=" + std::to_string(cerl) +
                          ", car=" + std::to_string(car) + ") failed: " + e.what());
      }
      cell.metrics = reconstruction_metrics(eval_data, cell.result.checkpoint);
      grid.cells.push_back(std::move(cell));
    }
  }
  return grid;
}

inline std::string format_ablation_grid(const AblationGrid& grid) {
  std::ostringstream out;
  out.precision(17);
  out << "cell\tuse_cerl\tuse_car\tmse\tpsnr\ttemporal_consistency\n";
  for (const AblationCell& c : grid.cells) {
    out << "cerl" << (c.use_cerl ? 1 : 0) << "_car" << (c.use_car ? 1 : 0) << '\t'
        << (c.use_cerl ? 1 : 0) << '\t' << (c.use_car ? 1 : 0) << '\t' << c.metrics.mse << '\t'
        << c.metrics.psnr << '\t' << c.metrics.temporal_consistency << '\n';
  }
  return out.str();
}

}  // namespace tavce

#endif  // TAVCE_EVALUATION_HPP
