#ifndef LATENTIC_PROCESS_HPP
#define LATENTIC_PROCESS_HPP

#include <memory>
#include <string>
#include <vector>

#include "latentic/encoder.hpp"
#include "latentic/mlp.hpp"
#include "latentic/odelik.hpp"
#include "latentic/sequence.hpp"

namespace latentic {

enum class ProcessKind { Edm, Rff };

// Diffusion process definition: schedule constants, time interval, prior.
// EDM uses s(t)=1, sigma(t)=t over [0.002, 80] with a N(0, sigma_max^2 I)
// prior; the rectified flow interpolates z_t = (1-t) z0 + t z1 over [0, 1]
// with a standard normal prior.
struct ProcessSpec {
  ProcessKind kind = ProcessKind::Edm;
  double t_start = 0.002;
  double t_end = 80.0;
  double sigma_max = 80.0;

  static ProcessSpec edm() { return ProcessSpec{ProcessKind::Edm, 0.002, 80.0, 80.0}; }
  static ProcessSpec rff() { return ProcessSpec{ProcessKind::Rff, 0.0, 1.0, 0.0}; }

  double prior_sigma() const { return kind == ProcessKind::Edm ? sigma_max : 1.0; }
  bool contains(double t) const { return t >= t_start && t <= t_end; }
};

// Autoregressive diffusion model: causal context encoder plus a conditioned
// head, parameterized as a denoiser (EDM) or a velocity field (RFF).
struct ScoreModel {
  std::string id;
  ProcessSpec process;
  EncoderParams encoder;
  MlpParams head;
  double sigma_data = 0.5;  // preconditioning constant, estimated from data
};

struct ScoreModelGrads {
  EncoderParams encoder;
  MlpParams head;
};

ScoreModelGrads zeros_like(const ScoreModel& m);

// Preconditioned denoiser D(z; sigma, ctx) = c_skip z + c_out F(c_in z, ...).
Vec edm_denoise(const ScoreModel& m, const Vec& z, double sigma, const Vec& ctx);
Vec edm_denoise_vjp(const ScoreModel& m, const Vec& z, double sigma, const Vec& ctx,
                    const Vec& cot);

// (D(z; sigma, ctx) - z) / sigma^2.
Vec edm_score(const ScoreModel& m, const Vec& z, double sigma, const Vec& ctx);

// Probability-flow right-hand side, oriented data -> noise for increasing t.
Vec ode_rhs(const ScoreModel& m, const Vec& z, double t, const Vec& ctx);

// Expected value of the noising process applied to z0 at level t.
Vec perturbation_mean(const Vec& z0, double t, const ProcessSpec& spec);

double prior_logpdf(const Vec& z1, const ProcessSpec& spec);

// Denoising score-matching loss with EDM preconditioning and log-normal sigma
// sampling; teacher-forced (the encoder sees clean frames). When grads is
// non-null, parameter gradients of the batch mean are accumulated into it.
double edm_train_loss(const ScoreModel& m, const std::vector<const LatentSequence*>& batch,
                      Rng& rng, ScoreModelGrads* grads = nullptr);

// Monte Carlo estimate of the rectified-flow objective with t uniform on
// [0,1] and z1 standard normal.
double rff_train_loss(const ScoreModel& m, const std::vector<const LatentSequence*>& batch,
                      Rng& rng, ScoreModelGrads* grads = nullptr);

// Single rectified-flow term ||(z1 - z0) - v(z_t, t)||^2 for a fixed triple.
double rff_loss_term(const ScoreModel& m, const Vec& z0, const Vec& z1, double t,
                     const Vec& ctx);

// ODE field of a neural model at fixed context.
class ModelOdeField : public OdeField {
 public:
  ModelOdeField(const ScoreModel& m, Vec ctx) : m_(&m), ctx_(std::move(ctx)) {}
  int dim() const override { return m_->head.out_dim; }
  Vec eval(const Vec& z, double t) const override { return ode_rhs(*m_, z, t, ctx_); }
  Vec vjp(const Vec& z, double t, const Vec& cot) const override;

 private:
  const ScoreModel* m_;
  Vec ctx_;
};

// Closed-form EDM field for data N(0, s0^2 I): dz/dt = t z / (s0^2 + t^2).
// The oracle for the likelihood engine.
class AnalyticGaussianEdmField : public OdeField {
 public:
  AnalyticGaussianEdmField(double s0, int dim) : s0_(s0), dim_(dim) {}
  int dim() const override { return dim_; }
  Vec eval(const Vec& z, double t) const override {
    return scaled(z, t / (s0_ * s0_ + t * t));
  }
  Vec vjp(const Vec& /*z*/, double t, const Vec& cot) const override {
    return scaled(cot, t / (s0_ * s0_ + t * t));
  }

 private:
  double s0_;
  int dim_;
};

// Log-density of the level-t marginal of the model at z_t, given the clean
// context. Hutchinson probes (if any) come from `rng`.
double model_loglik(const ScoreModel& m, const Vec& z_t, double t, const Vec& ctx,
                    const SolverConfig& cfg, Rng rng, SolveStats* stats = nullptr);

}  // namespace latentic

#endif
