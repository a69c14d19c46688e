#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "latentic/commands.hpp"

namespace {

void print_usage() {
  std::fprintf(stderr,
               "Usage: latentic <command> [options]\n"
               "\n"
               "Commands:\n"
               "  gen        generate synthetic datasets (train/val/corr/seg)\n"
               "  train      train a model on a dataset directory\n"
               "  ic         write per-sequence IC curves (CSV + SVG)\n"
               "  nll        held-out bits/dimension comparison table\n"
               "  errors     likelihood approximation error table\n"
               "  correlate  symbol-surprisal and timbre-invariance correlation tables\n"
               "  segment    boundary-detection precision/recall/F1 table\n"
               "\n"
               "Options:\n"
               "  --config PATH      JSON run configuration (strict schema)\n"
               "  --out DIR          output directory (created if missing)\n"
               "  --data DIR         dataset directory (commands other than gen)\n"
               "  --checkpoint PATH  model checkpoint (repeatable)\n"
               "  --resume PATH      checkpoint to continue training from\n"
               "  --seed N           override the config seed\n");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace latentic;
  if (argc < 2) {
    print_usage();
    return 2;
  }
  const std::string command = argv[1];

  std::filesystem::path config_path, out_dir, data_dir, resume;
  std::vector<std::filesystem::path> checkpoints;
  bool seed_override = false;
  uint64_t seed = 0;

  for (int i = 2; i < argc; ++i) {
    const std::string arg = argv[i];
    auto need_value = [&](const char* flag) -> const char* {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "latentic: %s needs a value\n", flag);
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--config")
      config_path = need_value("--config");
    else if (arg == "--out")
      out_dir = need_value("--out");
    else if (arg == "--data")
      data_dir = need_value("--data");
    else if (arg == "--checkpoint")
      checkpoints.emplace_back(need_value("--checkpoint"));
    else if (arg == "--resume")
      resume = need_value("--resume");
    else if (arg == "--seed") {
      seed = std::stoull(need_value("--seed"));
      seed_override = true;
    } else if (arg == "--help" || arg == "-h") {
      print_usage();
      return 0;
    } else {
      std::fprintf(stderr, "latentic: unknown option %s\n", arg.c_str());
      return 2;
    }
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed_override) cfg.seed = seed;
    if (out_dir.empty()) {
      std::fprintf(stderr, "latentic: --out is required\n");
      return 2;
    }

    if (command == "gen") return run_gen(cfg, out_dir);
    if (command == "train") return run_train(cfg, data_dir, out_dir, resume);
    if (command == "ic") return run_ic(cfg, checkpoints, data_dir, out_dir);
    if (command == "nll") return run_nll(cfg, checkpoints, data_dir, out_dir);
    if (command == "errors") return run_errors(cfg, checkpoints, data_dir, out_dir);
    if (command == "correlate") return run_correlate(cfg, checkpoints, data_dir, out_dir);
    if (command == "segment") return run_segment(cfg, checkpoints, data_dir, out_dir);

    std::fprintf(stderr, "latentic: unknown command %s\n", command.c_str());
    print_usage();
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "latentic %s: %s\n", command.c_str(), e.what());
    return 1;
  }
}
