#include "latentic/surprisal.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace latentic {

double bits_per_dim(double loglik_nats, int d) {
  if (d < 1) throw std::invalid_argument("bits_per_dim: d must be >= 1");
  return -loglik_nats / (static_cast<double>(d) * 0.6931471805599453);
}

namespace {

double frame_ic_with_ctx(const ScoreModel& m, const LatentSequence& seq, int k, double t,
                         const Vec& ctx, const SolverConfig& cfg, uint64_t seed) {
  const Vec z_t = perturbation_mean(seq.frames[static_cast<size_t>(k)], t, m.process);
  Rng rng(seed, Rng::key(seq.id, static_cast<uint64_t>(k)));
  const double ll = model_loglik(m, z_t, t, ctx, cfg, rng);
  return bits_per_dim(ll, seq.dim());
}

}  // namespace

double frame_ic(const ScoreModel& m, const LatentSequence& seq, int k, double t,
                const SolverConfig& cfg, uint64_t seed) {
  if (k < 1 || k >= seq.length())
    throw std::invalid_argument("frame_ic: k must be in [1, length)");
  // causal attention makes the prefix encoding identical to a full pass
  std::vector<Vec> prefix(seq.frames.begin(), seq.frames.begin() + k);
  std::vector<Vec> ctx = encoder_apply(m.encoder, prefix);
  return frame_ic_with_ctx(m, seq, k, t, ctx.back(), cfg, seed);
}

ICCurve ic_curve(const ScoreModel& m, const LatentSequence& seq, double t,
                 const SolverConfig& cfg, uint64_t seed) {
  if (seq.length() < 2) throw std::invalid_argument("ic_curve: sequence too short");
  std::vector<Vec> ctx = encoder_apply(m.encoder, seq.frames);
  ICCurve curve;
  curve.noise_level = t;
  curve.frame_rate = seq.frame_rate;
  curve.model_id = m.id;
  curve.values.reserve(static_cast<size_t>(seq.length() - 1));
  for (int k = 1; k < seq.length(); ++k)
    curve.values.push_back(
        frame_ic_with_ctx(m, seq, k, t, ctx[static_cast<size_t>(k - 1)], cfg, seed));
  return curve;
}

double mean_nll(const std::vector<ICCurve>& curves, const std::vector<bool>& trim_mask) {
  size_t total = 0;
  for (const auto& c : curves) total += c.values.size();
  if (trim_mask.size() != total)
    throw std::invalid_argument("mean_nll: mask length mismatch");
  double acc = 0.0;
  size_t n = 0, idx = 0;
  for (const auto& c : curves)
    for (double v : c.values) {
      if (!trim_mask[idx++]) {
        acc += v;
        ++n;
      }
    }
  if (n == 0) throw std::invalid_argument("mean_nll: everything masked");
  return acc / static_cast<double>(n);
}

void write_ic_csv(const ICCurve& curve, const std::filesystem::path& path,
                  const SolverConfig& cfg, uint64_t seed) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_ic_csv: cannot open " + path.string());
  os << "frame,time_seconds,ic_bits_per_dim\n";
  char buf[96];
  for (size_t j = 0; j < curve.values.size(); ++j) {
    const int frame = static_cast<int>(j) + 1;
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.9g\n", frame,
                  static_cast<double>(frame) / curve.frame_rate, curve.values[j]);
    os << buf;
  }
  nlohmann::json side;
  side["model_id"] = curve.model_id;
  side["noise_level"] = curve.noise_level;
  side["frame_rate"] = curve.frame_rate;
  side["solver"] = {{"atol", cfg.atol},
                    {"rtol", cfg.rtol},
                    {"max_steps", cfg.max_steps},
                    {"divergence", cfg.mode == DivergenceMode::Exact ? "exact" : "hutchinson"},
                    {"n_r", cfg.n_r}};
  side["seed"] = seed;
  std::ofstream js(path.string() + ".json", std::ios::trunc);
  js << side.dump(2) << "\n";
}

}  // namespace latentic
