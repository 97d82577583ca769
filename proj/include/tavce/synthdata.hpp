#ifndef TAVCE_SYNTHDATA_HPP
#define TAVCE_SYNTHDATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tavce/crc32.hpp"
#include "tavce/io.hpp"
#include "tavce/rng.hpp"
#include "tavce/tensor.hpp"

namespace tavce {

inline constexpr std::size_t kFrameSide = 32;
inline constexpr std::size_t kFramePixels = kFrameSide * kFrameSide;

struct GeneratorConfig {
  std::uint64_t seed = 0;
  std::uint32_t num_sequences = 50;
  std::uint32_t frames = 32;     // T
  std::uint32_t audio_dim = 64;  // A_dim
  std::uint32_t latent_dim = 4;  // k
  float smoothness = 0.9f;       // rho, AR(1) coefficient
  float audio_noise = 0.05f;     // sigma_a
  float coupling = 1.0f;         // gamma

  void validate() const {
    if (num_sequences == 0) throw TensorError("generator config: num_sequences must be positive");
    if (frames < 2) throw TensorError("generator config: T must be >= 2");
    if (audio_dim == 0 || latent_dim == 0) {
      throw TensorError("generator config: dimensions must be positive");
    }
    if (smoothness < 0.0f || smoothness >= 1.0f) {
      throw TensorError("generator config: smoothness must lie in [0, 1)");
    }
    if (coupling < 0.0f || coupling > 1.0f) {
      throw TensorError("generator config: coupling must lie in [0, 1]");
    }
    if (audio_noise < 0.0f) throw TensorError("generator config: audio_noise must be >= 0");
  }
};

// One synthetic speaker: T aligned (audio clip, frame) pairs plus the latent
// ground-truth trajectory. audio[i] corresponds to frames[i].
struct SequenceSample {
  std::uint32_t id = 0;
  std::uint32_t frames_count = 0;                // T
  std::vector<float> audio;                      // T x A_dim
  std::vector<float> frames;                     // T x 1 x 32 x 32, values in [0, 1]
  std::vector<float> latent;                     // T x k

  std::vector<float> frame_at(std::size_t t) const {
    return std::vector<float>(frames.begin() + static_cast<long>(t * kFramePixels),
                              frames.begin() + static_cast<long>((t + 1) * kFramePixels));
  }
  std::vector<float> audio_at(std::size_t t, std::size_t a_dim) const {
    return std::vector<float>(audio.begin() + static_cast<long>(t * a_dim),
                              audio.begin() + static_cast<long>((t + 1) * a_dim));
  }
};

namespace detail {

// Per-sequence smooth background: a 4x4 Gaussian grid, bilinearly upsampled.
// Fixed per id, it carries the "identity" of the synthetic speaker.
inline std::vector<float> smooth_background(SeededRng& rng) {
  constexpr std::size_t grid = 4;
  double g[grid][grid];
  for (auto& row : g)
    for (double& v : row) v = rng.next_gaussian();
  std::vector<float> bg(kFramePixels);
  const double step = static_cast<double>(grid - 1) / static_cast<double>(kFrameSide - 1);
  for (std::size_t y = 0; y < kFrameSide; ++y) {
    const double fy = y * step;
    const std::size_t y0 = std::min<std::size_t>(static_cast<std::size_t>(fy), grid - 2);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < kFrameSide; ++x) {
      const double fx = x * step;
      const std::size_t x0 = std::min<std::size_t>(static_cast<std::size_t>(fx), grid - 2);
      const double wx = fx - static_cast<double>(x0);
      const double v = g[y0][x0] * (1 - wy) * (1 - wx) + g[y0][x0 + 1] * (1 - wy) * wx +
                       g[y0 + 1][x0] * wy * (1 - wx) + g[y0 + 1][x0 + 1] * wy * wx;
#ifndef TAVCE_BG_SCALE
#define TAVCE_BG_SCALE 0.15
#endif
      bg[y * kFrameSide + x] = static_cast<float>(
          std::clamp(0.35 + TAVCE_BG_SCALE * v, 0.0, 1.0));
    }
  }
  return bg;
}

}  // namespace detail

// Mouth-height rendering: a rectangle centered at row 24, column 16, width 12,
// whose height tracks the first video-latent channel.
inline int mouth_height(double y0) {
  return static_cast<int>(std::lround(2.0 + 8.0 / (1.0 + std::exp(-y0))));
}

inline void render_mouth(std::vector<float>& frame, int h) {
  const int r0 = 24 - h / 2;
  for (int r = r0; r < r0 + h; ++r) {
    if (r < 0 || r >= static_cast<int>(kFrameSide)) continue;
    for (int c = 10; c <= 21; ++c) frame[static_cast<std::size_t>(r) * kFrameSide + c] = 1.0f;
  }
}

// Deterministic per (cfg.seed, id). The audio projection W_a is drawn from
// cfg.seed alone, so every sequence of a dataset shares it; the latent and
// noise streams are derived per id.
inline SequenceSample generate_sequence(const GeneratorConfig& cfg, std::uint32_t id) {
  cfg.validate();
  const std::size_t t = cfg.frames, a_dim = cfg.audio_dim, k = cfg.latent_dim;

  // Shared audio projection, unit output variance for unit-variance latents.
  SeededRng wa_rng(cfg.seed);
  std::vector<double> w_a(a_dim * k);
  const double wa_scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (auto& v : w_a) v = wa_rng.next_gaussian() * wa_scale;

  SeededRng rng = SeededRng::derive(cfg.seed, id);
  SequenceSample s;
  s.id = id;
  s.frames_count = static_cast<std::uint32_t>(t);
  s.audio.resize(t * a_dim);
  s.frames.resize(t * kFramePixels);
  s.latent.resize(t * k);

  const std::vector<float> bg = detail::smooth_background(rng);
  const double rho = cfg.smoothness;
  const double innovation = std::sqrt(1.0 - rho * rho);
  const double gamma = cfg.coupling;

  std::vector<double> z(k), z_alt(k);
  for (std::size_t step = 0; step < t; ++step) {
    for (std::size_t c = 0; c < k; ++c) {
      const double eps = rng.next_gaussian();
      z[c] = step == 0 ? eps : rho * z[c] + innovation * eps;
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double eps = rng.next_gaussian();
      z_alt[c] = step == 0 ? eps : rho * z_alt[c] + innovation * eps;
    }
    for (std::size_t c = 0; c < k; ++c) s.latent[step * k + c] = static_cast<float>(z[c]);

    for (std::size_t a = 0; a < a_dim; ++a) {
      double v = 0.0;
      for (std::size_t c = 0; c < k; ++c) v += w_a[a * k + c] * z[c];
      v += cfg.audio_noise * rng.next_gaussian();
      s.audio[step * a_dim + a] = static_cast<float>(v);
    }

    const double y0 = gamma * z[0] + (1.0 - gamma) * z_alt[0];
    std::vector<float> frame = bg;
    render_mouth(frame, mouth_height(y0));
    std::copy(frame.begin(), frame.end(), s.frames.begin() + static_cast<long>(step * kFramePixels));
  }
  return s;
}

// --------------------------- TVDS file format ------------------------------
// "TVDS" | u32 version=1 | header: u64 seed, u32 num_sequences, u32 T,
// u32 A_dim, u32 k, f32 rho, f32 sigma_a, f32 gamma | u32 count |
// per sequence: u32 id, audio, frames, latent as raw f32 LE row-major |
// u32 CRC32 (IEEE) over everything after the magic.

inline constexpr std::uint32_t kTvdsVersion = 1;

inline std::vector<std::uint8_t> serialize_dataset(const std::vector<SequenceSample>& samples,
                                                   const GeneratorConfig& cfg) {
  if (samples.empty()) throw IoError("write_dataset: empty sample list");
  cfg.validate();
  ByteWriter w;
  w.str("TVDS");
  w.u32(kTvdsVersion);
  w.u64(cfg.seed);
  w.u32(cfg.num_sequences);
  w.u32(cfg.frames);
  w.u32(cfg.audio_dim);
  w.u32(cfg.latent_dim);
  w.f32(cfg.smoothness);
  w.f32(cfg.audio_noise);
  w.f32(cfg.coupling);
  w.u32(static_cast<std::uint32_t>(samples.size()));
  for (const SequenceSample& s : samples) {
    w.u32(s.id);
    for (float v : s.audio) w.f32(v);
    for (float v : s.frames) w.f32(v);
    for (float v : s.latent) w.f32(v);
  }
  const auto& buf = w.data();
  std::uint32_t crc = Crc32::of(buf.data() + 4, buf.size() - 4);
  ByteWriter tail;
  tail.u32(crc);
  std::vector<std::uint8_t> out = buf;
  out.insert(out.end(), tail.data().begin(), tail.data().end());
  return out;
}

inline void write_dataset(const std::vector<SequenceSample>& samples, const GeneratorConfig& cfg,
                          const std::string& path) {
  atomic_write_file(path, serialize_dataset(samples, cfg));
}

inline std::pair<std::vector<SequenceSample>, GeneratorConfig> parse_dataset(
    std::vector<std::uint8_t> bytes) {
  if (bytes.size() < 8) throw IoError("not a TVDS file: too short");
  ByteReader r(std::move(bytes));
  if (r.str(4) != "TVDS") throw IoError("not a TVDS file: bad magic");
  const std::size_t payload_end = r.size() - 4;
  if (r.size() < 4 + 4 + 36 + 4 + 4) throw IoError("truncated TVDS file");
  const std::uint32_t stored_crc = [&] {
    ByteReader tail(std::vector<std::uint8_t>(r.data().end() - 4, r.data().end()));
    return tail.u32();
  }();
  const std::uint32_t actual_crc = Crc32::of(r.data().data() + 4, payload_end - 4);
  if (stored_crc != actual_crc) throw IoError("TVDS CRC mismatch: file is corrupt");

  const std::uint32_t version = r.u32();
  if (version != kTvdsVersion) {
    throw IoError("unsupported TVDS version " + std::to_string(version));
  }
  GeneratorConfig cfg;
  cfg.seed = r.u64();
  cfg.num_sequences = r.u32();
  cfg.frames = r.u32();
  cfg.audio_dim = r.u32();
  cfg.latent_dim = r.u32();
  cfg.smoothness = r.f32();
  cfg.audio_noise = r.f32();
  cfg.coupling = r.f32();
  cfg.validate();
  const std::uint32_t count = r.u32();
  std::vector<SequenceSample> samples;
  samples.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    SequenceSample s;
    s.id = r.u32();
    s.frames_count = cfg.frames;
    s.audio.resize(static_cast<std::size_t>(cfg.frames) * cfg.audio_dim);
    s.frames.resize(static_cast<std::size_t>(cfg.frames) * kFramePixels);
    s.latent.resize(static_cast<std::size_t>(cfg.frames) * cfg.latent_dim);
    for (float& v : s.audio) v = r.f32();
    for (float& v : s.frames) v = r.f32();
    for (float& v : s.latent) v = r.f32();
    samples.push_back(std::move(s));
  }
  if (r.pos() != payload_end) throw IoError("TVDS file has trailing garbage");
  return {std::move(samples), cfg};
}

inline std::pair<std::vector<SequenceSample>, GeneratorConfig> read_dataset(
    const std::string& path) {
  return parse_dataset(read_file(path));
}

}  // namespace tavce

#endif  // TAVCE_SYNTHDATA_HPP
