#ifndef LATENTIC_TRAINER_HPP
#define LATENTIC_TRAINER_HPP

#include <filesystem>
#include <functional>
#include <variant>

#include "latentic/checkpoint.hpp"
#include "latentic/givt.hpp"
#include "latentic/optimizer.hpp"
#include "latentic/process.hpp"

namespace latentic {

struct ModelConfig {
  std::string kind = "edm";  // edm | rff | givt
  int dim = 16;
  int width = 64;
  int heads = 4;
  int blocks = 2;
  int max_seq = 256;
  int head_hidden = 128;
  int head_layers = 3;  // weight matrices in the head
  int temb_dim = 32;
  int gmm_components = 8;
  double sigma_floor = 1e-3;
};

using AnyModel = std::variant<ScoreModel, GivtModel>;

std::string model_kind(const AnyModel& m);
std::string model_id(const AnyModel& m);
int model_dim(const AnyModel& m);
int model_max_seq(const AnyModel& m);

AnyModel make_model(const ModelConfig& cfg, uint64_t seed);

// Population standard deviation over all frame entries; the EDM
// preconditioning constant.
double estimate_sigma_data(const std::vector<LatentSequence>& data);

ParamRefs model_params(AnyModel& m);

struct TrainHistory {
  std::vector<std::pair<int, double>> loss;  // (step, loss)
  int final_step = 0;
};

// Runs Adam from state.step to cfg.total_steps. Batches are sampled (and long
// sequences cropped) with streams keyed by the absolute step, so resumed runs
// replay the same schedule.
TrainHistory train_model(AnyModel& m, const std::vector<LatentSequence>& data,
                         const TrainConfig& cfg, uint64_t seed, AdamState& state,
                         const std::function<void(int, double)>& on_step = {});

void save_model(const std::filesystem::path& path, AnyModel& m, uint64_t seed,
                const TrainConfig& cfg, const AdamState* adam, bool diverged = false);

AnyModel load_model(const std::filesystem::path& path, AdamState* adam = nullptr,
                    nlohmann::json* header_out = nullptr);

}  // namespace latentic

#endif
