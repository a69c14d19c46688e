#ifndef LATENTIC_OPTIMIZER_HPP
#define LATENTIC_OPTIMIZER_HPP

#include <vector>

#include "latentic/mlp.hpp"

namespace latentic {

struct TrainConfig {
  double lr = 3e-4;
  int warmup_steps = 100;
  int total_steps = 1000;
  int batch_size = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// lr * linear warmup * cosine decay; 0 at step 0 (warmup > 0), ~0 at the end.
double lr_at_step(const TrainConfig& cfg, int step);

// First/second moment accumulators, flat over a fixed parameter traversal.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int step = 0;
};

AdamState make_adam_state(const ParamRefs& params);

// One Adam update with the scheduled learning rate. `params` and `grads` must
// come from identical traversals. Throws TrainingDiverged on non-finite
// gradients.
void train_step(const ParamRefs& params, const ParamRefs& grads, AdamState& state,
                const TrainConfig& cfg);

}  // namespace latentic

#endif
