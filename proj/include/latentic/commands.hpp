#ifndef LATENTIC_COMMANDS_HPP
#define LATENTIC_COMMANDS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "latentic/analysis.hpp"
#include "latentic/synthdata.hpp"
#include "latentic/trainer.hpp"

namespace latentic {

// Resolved run configuration. Parsed strictly: unknown keys are rejected so a
// typo cannot silently fall back to a default.
struct RunConfig {
  uint64_t seed = 1234;

  struct Data {
    int n_symbols = 8;
    int frames_per_symbol = 4;
    int dim = 16;
    int coarse_dim = 4;
    double frame_rate = 10.0;
    double fine_amp = 0.05;
    double coarse_jitter = 0.02;
    int length_symbols = 24;
    std::vector<int> timbres = {0, 1, 2};
    int n_materials_train = 12;
    int n_materials_val = 3;
    int n_materials_corr = 4;
    int n_segmented_train = 4;
    int n_segmented_eval = 3;
    int sections = 6;
    int symbols_per_section = 12;
  } data;

  ModelConfig model;

  TrainConfig train;

  struct Solver {
    double tol = 1e-3;
    int n_r = 4;
    int max_steps = 100000;
    std::string divergence = "hutchinson";
  } solver;

  struct Experiment {
    std::vector<double> noise_levels_edm = {0.002, 10.0, 20.0, 50.0, 60.0};
    std::vector<double> noise_levels_rff = {0.0, 0.1, 0.5, 0.6, 0.7};
    std::vector<double> seg_levels_edm = {0.002, 17.6, 40.0, 60.0};
    std::vector<double> seg_levels_rff = {0.0, 0.25, 0.5, 0.7};
    std::vector<int> error_n_r = {1, 2, 4, 8, 16, 32};
    std::vector<double> error_tols = {1.0, 0.1, 0.01, 0.001};
    int error_max_frames = 120;
    double trim_fraction = 0.01;
    double novelty_sigma = 5.0;
    int peak_window = 10;
    double peak_kappa = 1.0;
    double boundary_window_seconds = 0.5;
    int permutation_shuffles = 10000;
  } experiment;

  SolverConfig solver_config() const;
  NoveltyConfig novelty_config() const;
  GeneratorSpec generator_spec() const;
  std::vector<double> levels_for(const std::string& kind, bool segmentation) const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_json(const RunConfig& cfg);

// Subcommand bodies; each writes its outputs plus resolved_config.json under
// `out` and returns a process exit code.
int run_gen(const RunConfig& cfg, const std::filesystem::path& out);
int run_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
              const std::filesystem::path& out, const std::filesystem::path& resume);
int run_ic(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
           const std::filesystem::path& data_dir, const std::filesystem::path& out);
int run_nll(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
            const std::filesystem::path& data_dir, const std::filesystem::path& out);
int run_errors(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
               const std::filesystem::path& data_dir, const std::filesystem::path& out);
int run_correlate(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out);
int run_segment(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
                const std::filesystem::path& data_dir, const std::filesystem::path& out);

}  // namespace latentic

#endif
