// tavce: dataset generation, two-stage training, evaluation, ablation and
// gradient checking for the temporal audio-visual correlation pipeline.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "tavce/config.hpp"
#include "tavce/evaluation.hpp"
#include "tavce/grad_suite.hpp"
#include "tavce/synthdata.hpp"
#include "tavce/training.hpp"

namespace {

using namespace tavce;

void print_usage() {
  std::cout <<
      "usage: tavce <subcommand> [--config FILE] [--key value ...]\n"
      "\n"
      "subcommands:\n"
      "  gen-data      generate a synthetic TVDS dataset\n"
      "  train-metric  stage 1: pre-train the correlation metric\n"
      "  train-gen     stage 2: train the generation pipeline (--no-cerl/--no-car)\n"
      "  eval          evaluate checkpoints on the held-out split\n"
      "  ablate        run the 2x2 CERL/CAR ablation grid\n"
      "  grad-check    finite-difference check of every differentiable op\n"
      "\n"
      "keys (config file 'key = value' lines or --key value flags; flags win):\n"
      << config_help();
}

int parse_threads_env() {
  const char* env = std::getenv("TAVCE_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  if (n < 1) throw ConfigError("TAVCE_THREADS must be a positive integer");
  return n;
}

int cmd_gen_data(const CliConfig& cfg) {
  GeneratorConfig gen = cfg.generator_config();
  std::vector<SequenceSample> samples;
  samples.reserve(gen.num_sequences);
  for (std::uint32_t id = 0; id < gen.num_sequences; ++id) {
    samples.push_back(generate_sequence(gen, id));
  }
  write_dataset(samples, gen, cfg.get_path("data"));
  std::cout << "wrote " << samples.size() << " sequences to " << cfg.get_path("data") << "\n";
  return 0;
}

int cmd_train_metric(const CliConfig& cfg) {
  auto [samples, gen] = read_dataset(cfg.get_path("data"));
  auto [train, held_out] = split_dataset(samples);
  if (train.empty()) throw TensorError("train-metric: no training sequences after split");
  TrainConfig tc = cfg.train_config(1);
  tc.dims.a_dim = gen.audio_dim;
  TrainResult result = train_stage1(train, tc);
  save_checkpoint(result.checkpoint, cfg.get_path("metric_ckpt"));
  atomic_write_text(cfg.get_path("metric_ckpt") + ".log", format_loss_log(result.log));
  std::cout << "stage-1 final loss " << result.log.back().total << ", checkpoint at "
            << cfg.get_path("metric_ckpt") << "\n";
  return 0;
}

int cmd_train_gen(const CliConfig& cfg) {
  auto [samples, gen] = read_dataset(cfg.get_path("data"));
  auto [train, held_out] = split_dataset(samples);
  if (train.empty()) throw TensorError("train-gen: no training sequences after split");
  Checkpoint metric = load_checkpoint(cfg.get_path("metric_ckpt"));
  TrainConfig tc = cfg.train_config(2);
  tc.dims.a_dim = gen.audio_dim;
  TrainResult result = train_stage2(train, metric, tc);
  save_checkpoint(result.checkpoint, cfg.get_path("gen_ckpt"));
  atomic_write_text(cfg.get_path("gen_ckpt") + ".log", format_loss_log(result.log));
  std::cout << "stage-2 final loss " << result.log.back().total << ", checkpoint at "
            << cfg.get_path("gen_ckpt") << "\n";
  return 0;
}

int cmd_eval(const CliConfig& cfg) {
  auto [samples, gen] = read_dataset(cfg.get_path("data"));
  auto [train, held_out] = split_dataset(samples);
  if (held_out.empty()) throw TensorError("eval: no held-out sequences after split");
  Checkpoint metric = load_checkpoint(cfg.get_path("metric_ckpt"));
  const std::size_t tau = static_cast<std::size_t>(cfg.get_int("tau"));

  EvalReport report;
  report.separation = separation_stats(held_out, metric, tau);
  auto [top1, chance] = retrieval_accuracy(held_out, metric);
  report.retrieval_top1 = top1;
  report.chance_level = chance;
  if (std::filesystem::exists(cfg.get_path("gen_ckpt"))) {
    Checkpoint gen_ckpt = load_checkpoint(cfg.get_path("gen_ckpt"));
    ReconstructionMetrics m = reconstruction_metrics(held_out, gen_ckpt);
    report.has_reconstruction = true;
    report.mse = m.mse;
    report.psnr = m.psnr;
    report.temporal_consistency = m.temporal_consistency;
  }
  report.config_echo = cfg.echo("config.");
  atomic_write_text(cfg.get_path("report"), format_eval_report(report));
  std::cout << "separation " << report.separation.separation << ", retrieval top-1 "
            << report.retrieval_top1 << " (chance " << report.chance_level << "), report at "
            << cfg.get_path("report") << "\n";
  return 0;
}

int cmd_ablate(const CliConfig& cfg) {
  auto [samples, gen] = read_dataset(cfg.get_path("data"));
  auto [train, held_out] = split_dataset(samples);
  if (train.empty() || held_out.empty()) throw TensorError("ablate: dataset too small to split");
  Checkpoint metric = load_checkpoint(cfg.get_path("metric_ckpt"));
  TrainConfig tc = cfg.train_config(2);
  tc.dims.a_dim = gen.audio_dim;
  AblationGrid grid = run_ablation(train, held_out, metric, tc);
  atomic_write_text(cfg.get_path("grid"), format_ablation_grid(grid));
  for (const AblationCell& cell : grid.cells) {
    EvalReport report;
    report.separation = separation_stats(held_out, metric, tc.tau);
    auto [top1, chance] = retrieval_accuracy(held_out, metric);
    report.retrieval_top1 = top1;
    report.chance_level = chance;
    report.has_reconstruction = true;
    report.mse = cell.metrics.mse;
    report.psnr = cell.metrics.psnr;
    report.temporal_consistency = cell.metrics.temporal_consistency;
    report.config_echo = cfg.echo("config.");
    const std::string cell_path = cfg.get_path("grid") + ".cerl" +
                                  std::to_string(cell.use_cerl ? 1 : 0) + "_car" +
                                  std::to_string(cell.use_car ? 1 : 0) + ".txt";
    atomic_write_text(cell_path, format_eval_report(report));
  }
  std::cout << "ablation grid at " << cfg.get_path("grid") << "\n";
  return 0;
}

int cmd_grad_check(const CliConfig& cfg) {
  (void)cfg;
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool all_pass = true;
  for (const GradSuiteResult& r : run_grad_suite(seeds)) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  max_rel_error="
              << r.max_rel_error << "\n";
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) {
    std::cerr << "error: gradient check failed (see FAIL lines above)\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    print_usage();
    return args.empty() ? 1 : 0;
  }
  const std::string subcommand = args[0];
  try {
    parse_threads_env();
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> flags;
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string arg = args[i];
      if (arg == "--help" || arg == "-h") {
        print_usage();
        return 0;
      }
      if (arg == "--no-cerl") {
        flags.emplace_back("use_cerl", "false");
        continue;
      }
      if (arg == "--no-car") {
        flags.emplace_back("use_car", "false");
        continue;
      }
      if (arg.rfind("--", 0) != 0) {
        throw tavce::ConfigError("expected --key value, got '" + arg + "'");
      }
      std::string key = arg.substr(2);
      std::string value;
      const std::size_t eq = key.find('=');
      if (eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else {
        if (i + 1 >= args.size()) throw tavce::ConfigError("flag --" + key + " needs a value");
        value = args[++i];
      }
      if (key == "config") {
        config_file = value;
      } else {
        flags.emplace_back(key, value);
      }
    }
    tavce::CliConfig cfg = tavce::parse_config(config_file, flags);

    if (subcommand == "gen-data") return cmd_gen_data(cfg);
    if (subcommand == "train-metric") return cmd_train_metric(cfg);
    if (subcommand == "train-gen") return cmd_train_gen(cfg);
    if (subcommand == "eval") return cmd_eval(cfg);
    if (subcommand == "ablate") return cmd_ablate(cfg);
    if (subcommand == "grad-check") return cmd_grad_check(cfg);
    std::cerr << "error: unknown subcommand '" << subcommand << "'\n";
    print_usage();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << subcommand << ": " << e.what() << "\n";
    return 1;
  }
}
