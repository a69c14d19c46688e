#include "latentic/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "latentic/errors.hpp"

namespace latentic {

double lr_at_step(const TrainConfig& cfg, int step) {
  if (step >= cfg.total_steps) throw std::invalid_argument("lr_at_step: step out of range");
  double warm = 1.0;
  if (cfg.warmup_steps > 0)
    warm = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.warmup_steps));
  const double denom = static_cast<double>(std::max(1, cfg.total_steps - cfg.warmup_steps));
  const double progress =
      std::min(1.0, std::max(0.0, static_cast<double>(step - cfg.warmup_steps) / denom));
  const double cosine = 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
  return cfg.lr * warm * cosine;
}

AdamState make_adam_state(const ParamRefs& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.emplace_back(p.data->size(), 0.0);
    s.v.emplace_back(p.data->size(), 0.0);
  }
  return s;
}

void train_step(const ParamRefs& params, const ParamRefs& grads, AdamState& state,
                const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("train_step: mismatched parameter registry");
  for (const auto& g : grads)
    for (double v : *g.data)
      if (!std::isfinite(v)) throw TrainingDiverged("train_step: non-finite gradient in " + g.name);

  const double lr = lr_at_step(cfg, state.step);
  const int t = state.step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i].data;
    const auto& g = *grads[i].data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  state.step = t;
}

}  // namespace latentic
