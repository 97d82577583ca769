#ifndef TAVCE_CONFIG_HPP
#define TAVCE_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tavce/encoders.hpp"
#include "tavce/synthdata.hpp"
#include "tavce/training.hpp"

namespace tavce {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { Int, Float, Bool, Path };

struct SchemaEntry {
  const char* key;
  KeyType type;
  const char* default_value;  // empty string = resolved per subcommand
  const char* help;
};

// Single source of truth for config-file keys, CLI flags and --help output.
inline const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = {
      {"seed", KeyType::Int, "0", "seed for data generation and training"},
      {"seqs", KeyType::Int, "50", "number of synthetic sequences"},
      {"frames", KeyType::Int, "32", "frames per sequence (T)"},
      {"a_dim", KeyType::Int, "64", "audio clip length"},
      {"k", KeyType::Int, "4", "latent trajectory dimension"},
      {"rho", KeyType::Float, "0.9", "AR(1) smoothness of the latent trajectory"},
      {"sigma_a", KeyType::Float, "0.05", "audio noise level"},
      {"gamma", KeyType::Float, "1.0", "audio-visual coupling in [0,1]"},
      {"iters", KeyType::Int, "", "training iterations (default 2000 metric / 1500 generator)"},
      {"lr", KeyType::Float, "", "learning rate (default 1e-4 metric / 2e-4 generator)"},
      {"batch", KeyType::Int, "4", "sequences per stage-1 iteration"},
      {"tau", KeyType::Int, "2", "negative-sampling exclusion window"},
      {"lambda_reg", KeyType::Float, "1.0", "weight of the CAR regularization term"},
      {"use_cerl", KeyType::Bool, "true", "enable CERL fusion in stage 2"},
      {"use_car", KeyType::Bool, "true", "enable CAR regularization in stage 2"},
      {"d", KeyType::Int, "16", "embedding dimension D"},
      {"c", KeyType::Int, "32", "feature map channels C"},
      {"data", KeyType::Path, "data.tvds", "dataset file path"},
      {"metric_ckpt", KeyType::Path, "metric.tvce", "stage-1 checkpoint path"},
      {"gen_ckpt", KeyType::Path, "gen.tvce", "stage-2 checkpoint path"},
      {"report", KeyType::Path, "eval.txt", "evaluation report path"},
      {"grid", KeyType::Path, "ablation.tsv", "ablation grid path"},
  };
  return schema;
}

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_dist = static_cast<std::size_t>(-1);
  for (const SchemaEntry& e : config_schema()) {
    const std::size_t d = edit_distance(key, e.key);
    if (d < best_dist) {
      best_dist = d;
      best = e.key;
    }
  }
  return best;
}

inline const SchemaEntry& find_entry(const std::string& key) {
  for (const SchemaEntry& e : config_schema()) {
    if (key == e.key) return e;
  }
  throw ConfigError("unknown config key '" + key + "' (did you mean '" + nearest_key(key) + "'?)");
}

inline void validate_value(const SchemaEntry& e, const std::string& value) {
  std::istringstream in(value);
  switch (e.type) {
    case KeyType::Int: {
      long long v;
      if (!(in >> v) || !in.eof()) {
        throw ConfigError(std::string("key '") + e.key + "': expected integer, got '" + value +
                          "'");
      }
      break;
    }
    case KeyType::Float: {
      double v;
      if (!(in >> v) || !in.eof()) {
        throw ConfigError(std::string("key '") + e.key + "': expected number, got '" + value +
                          "'");
      }
      break;
    }
    case KeyType::Bool:
      if (value != "true" && value != "false" && value != "1" && value != "0") {
        throw ConfigError(std::string("key '") + e.key + "': expected true/false, got '" + value +
                          "'");
      }
      break;
    case KeyType::Path:
      if (value.empty()) throw ConfigError(std::string("key '") + e.key + "': empty path");
      break;
  }
}

}  // namespace detail

// Resolved configuration: defaults <- config file <- flags (flags win).
struct CliConfig {
  std::map<std::string, std::string> values;

  const std::string& raw(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end() || it->second.empty()) {
      throw ConfigError("config key '" + key + "' is unset");
    }
    return it->second;
  }
  bool is_set(const std::string& key) const {
    auto it = values.find(key);
    return it != values.end() && !it->second.empty();
  }
  std::int64_t get_int(const std::string& key) const { return std::stoll(raw(key)); }
  double get_float(const std::string& key) const { return std::stod(raw(key)); }
  bool get_bool(const std::string& key) const {
    const std::string& v = raw(key);
    return v == "true" || v == "1";
  }
  const std::string& get_path(const std::string& key) const { return raw(key); }

  void set(const std::string& key, const std::string& value) {
    const SchemaEntry& e = detail::find_entry(key);
    detail::validate_value(e, value);
    values[key] = value;
  }

  GeneratorConfig generator_config() const {
    GeneratorConfig g;
    g.seed = static_cast<std::uint64_t>(get_int("seed"));
    g.num_sequences = static_cast<std::uint32_t>(get_int("seqs"));
    g.frames = static_cast<std::uint32_t>(get_int("frames"));
    g.audio_dim = static_cast<std::uint32_t>(get_int("a_dim"));
    g.latent_dim = static_cast<std::uint32_t>(get_int("k"));
    g.smoothness = static_cast<float>(get_float("rho"));
    g.audio_noise = static_cast<float>(get_float("sigma_a"));
    g.coupling = static_cast<float>(get_float("gamma"));
    g.validate();
    return g;
  }

  TrainConfig train_config(int stage) const {
    TrainConfig t;
    t.stage = static_cast<std::uint8_t>(stage);
    t.iterations = is_set("iters") ? static_cast<std::uint32_t>(get_int("iters"))
                                   : (stage == 1 ? 2000u : 1500u);
    t.learning_rate = is_set("lr") ? static_cast<float>(get_float("lr"))
                                   : (stage == 1 ? 1e-4f : 2e-4f);
    t.batch_sequences = static_cast<std::uint32_t>(get_int("batch"));
    t.tau = static_cast<std::uint32_t>(get_int("tau"));
    t.lambda_reg = static_cast<float>(get_float("lambda_reg"));
    t.use_cerl = get_bool("use_cerl");
    t.use_car = get_bool("use_car");
    t.seed = static_cast<std::uint64_t>(get_int("seed"));
    t.dims.a_dim = static_cast<std::size_t>(get_int("a_dim"));
    t.dims.d = static_cast<std::size_t>(get_int("d"));
    t.dims.c = static_cast<std::size_t>(get_int("c"));
    t.dims.img = kFrameSide;
    t.validate();
    return t;
  }

  // Every key in schema order, for report headers.
  std::string echo(const std::string& prefix) const {
    std::ostringstream out;
    for (const SchemaEntry& e : config_schema()) {
      auto it = values.find(e.key);
      out << prefix << e.key << "=" << (it != values.end() ? it->second : "") << '\n';
    }
    return out.str();
  }
};

inline CliConfig parse_config(const std::string& file_path,
                              const std::vector<std::pair<std::string, std::string>>& flag_pairs) {
  CliConfig cfg;
  for (const SchemaEntry& e : config_schema()) cfg.values[e.key] = e.default_value;
  if (!file_path.empty()) {
    std::ifstream in(file_path);
    if (!in) throw ConfigError("cannot open config file: " + file_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(file_path + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const auto& [key, value] : flag_pairs) cfg.set(key, value);
  return cfg;
}

inline std::string config_help() {
  std::ostringstream out;
  for (const SchemaEntry& e : config_schema()) {
    out << "  --" << e.key << " <value>";
    for (std::size_t pad = std::string(e.key).size(); pad < 14; ++pad) out << ' ';
    out << e.help;
    if (e.default_value[0] != '\0') out << " (default: " << e.default_value << ")";
    out << '\n';
  }
  return out.str();
}

}  // namespace tavce

#endif  // TAVCE_CONFIG_HPP
