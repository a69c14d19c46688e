#include "latentic/process.hpp"

#include <cmath>
#include <stdexcept>

#include "latentic/errors.hpp"
#include "latentic/stats.hpp"

namespace latentic {

namespace {

struct EdmScales {
  double c_skip, c_out, c_in, c_noise;
};

EdmScales edm_scales(double sigma, double sigma_data) {
  const double s2 = sigma * sigma;
  const double d2 = sigma_data * sigma_data;
  EdmScales s;
  s.c_skip = d2 / (s2 + d2);
  s.c_out = sigma * sigma_data / std::sqrt(s2 + d2);
  s.c_in = 1.0 / std::sqrt(s2 + d2);
  s.c_noise = 0.25 * std::log(sigma);
  return s;
}

void check_sigma(const ScoreModel& m, double sigma) {
  if (m.process.kind != ProcessKind::Edm)
    throw std::invalid_argument("edm op on a non-EDM model");
  if (!m.process.contains(sigma))
    throw std::invalid_argument("sigma outside the schedule range");
}

}  // namespace

ScoreModelGrads zeros_like(const ScoreModel& m) {
  return ScoreModelGrads{zeros_like(m.encoder), zeros_like(m.head)};
}

Vec edm_denoise(const ScoreModel& m, const Vec& z, double sigma, const Vec& ctx) {
  check_sigma(m, sigma);
  const EdmScales s = edm_scales(sigma, m.sigma_data);
  Vec f = mlp_apply(m.head, scaled(z, s.c_in), s.c_noise, ctx);
  Vec d(z.size());
  for (size_t i = 0; i < z.size(); ++i) d[i] = s.c_skip * z[i] + s.c_out * f[i];
  return d;
}

Vec edm_denoise_vjp(const ScoreModel& m, const Vec& z, double sigma, const Vec& ctx,
                    const Vec& cot) {
  check_sigma(m, sigma);
  const EdmScales s = edm_scales(sigma, m.sigma_data);
  Vec inner = mlp_vjp(m.head, scaled(z, s.c_in), s.c_noise, ctx, cot);
  Vec out(z.size());
  for (size_t i = 0; i < z.size(); ++i)
    out[i] = s.c_skip * cot[i] + s.c_out * s.c_in * inner[i];
  return out;
}

Vec edm_score(const ScoreModel& m, const Vec& z, double sigma, const Vec& ctx) {
  Vec d = edm_denoise(m, z, sigma, ctx);
  const double inv = 1.0 / (sigma * sigma);
  Vec s(z.size());
  for (size_t i = 0; i < z.size(); ++i) s[i] = (d[i] - z[i]) * inv;
  return s;
}

Vec ode_rhs(const ScoreModel& m, const Vec& z, double t, const Vec& ctx) {
  if (!m.process.contains(t)) throw std::invalid_argument("ode_rhs: t outside the process interval");
  if (m.process.kind == ProcessKind::Edm) {
    // dz/dt = -sigma'(t) sigma(t) * score = (z - D(z; t, ctx)) / t  for s=1, sigma=t
    Vec d = edm_denoise(m, z, t, ctx);
    Vec out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = (z[i] - d[i]) / t;
    return out;
  }
  return mlp_apply(m.head, z, t, ctx);
}

Vec ModelOdeField::vjp(const Vec& z, double t, const Vec& cot) const {
  if (m_->process.kind == ProcessKind::Edm) {
    Vec dv = edm_denoise_vjp(*m_, z, t, ctx_, cot);
    Vec out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = (cot[i] - dv[i]) / t;
    return out;
  }
  return mlp_vjp(m_->head, z, t, ctx_, cot);
}

Vec perturbation_mean(const Vec& z0, double t, const ProcessSpec& spec) {
  if (!spec.contains(t))
    throw std::invalid_argument("perturbation_mean: t outside the process interval");
  if (spec.kind == ProcessKind::Edm) return z0;  // s(t) = 1
  return scaled(z0, 1.0 - t);
}

double prior_logpdf(const Vec& z1, const ProcessSpec& spec) {
  return isotropic_gaussian_logpdf(z1, spec.prior_sigma());
}

namespace {

// Shared teacher-forced loop: encode clean frames once, apply `frame_loss`
// per predicted frame, backprop accumulated context cotangents.
template <typename FrameLoss>
double teacher_forced_loss(const ScoreModel& m, const std::vector<const LatentSequence*>& batch,
                           ScoreModelGrads* grads, FrameLoss&& frame_loss) {
  if (batch.empty()) throw std::invalid_argument("train_loss: empty batch");
  int n_frames = 0;
  for (const auto* seq : batch) {
    if (seq->length() < 2) throw std::invalid_argument("train_loss: sequence too short");
    n_frames += seq->length() - 1;
  }
  const double inv_frames = 1.0 / static_cast<double>(n_frames);

  double loss = 0.0;
  for (const auto* seq : batch) {
    EncoderCache cache;
    std::vector<Vec> ctx = encoder_apply(m.encoder, seq->frames, grads ? &cache : nullptr);
    std::vector<Vec> cot_ctx;
    if (grads) cot_ctx.assign(ctx.size(), Vec(static_cast<size_t>(m.encoder.width), 0.0));
    for (int k = 1; k < seq->length(); ++k) {
      loss += frame_loss(seq->frames[static_cast<size_t>(k)], ctx[static_cast<size_t>(k - 1)],
                         inv_frames, grads ? &cot_ctx[static_cast<size_t>(k - 1)] : nullptr);
    }
    if (grads) encoder_backward(m.encoder, cache, cot_ctx, grads->encoder);
  }
  if (!std::isfinite(loss)) throw TrainingDiverged("train_loss: non-finite loss");
  return loss;
}

}  // namespace

double edm_train_loss(const ScoreModel& m, const std::vector<const LatentSequence*>& batch,
                      Rng& rng, ScoreModelGrads* grads) {
  const int d = m.head.out_dim;
  return teacher_forced_loss(
      m, batch, grads,
      [&](const Vec& target, const Vec& ctx, double weight, Vec* cot_ctx) {
        // log-normal sigma, location -1.2, scale 1.2
        double sigma = std::exp(-1.2 + 1.2 * rng.normal());
        sigma = std::clamp(sigma, m.process.t_start, m.process.t_end);
        const EdmScales s = edm_scales(sigma, m.sigma_data);
        Vec noisy(target.size());
        for (size_t i = 0; i < target.size(); ++i) noisy[i] = target[i] + sigma * rng.normal();

        Vec input;
        input.reserve(static_cast<size_t>(m.head.in_dim()));
        for (double v : noisy) input.push_back(s.c_in * v);
        input.insert(input.end(), ctx.begin(), ctx.end());
        Vec temb = time_embedding(s.c_noise, m.head.temb_dim);
        input.insert(input.end(), temb.begin(), temb.end());

        MlpCache cache;
        Vec f = mlp_forward_raw(m.head, input, grads ? &cache : nullptr);
        // lambda(sigma) * ||D - target||^2 / d with lambda = (s^2+sd^2)/(s*sd)^2
        const double lam = 1.0 / (s.c_out * s.c_out);
        double term = 0.0;
        Vec cot_f;
        if (grads) cot_f.assign(f.size(), 0.0);
        for (size_t i = 0; i < f.size(); ++i) {
          const double D = s.c_skip * noisy[i] + s.c_out * f[i];
          const double r = D - target[i];
          term += lam * r * r;
          if (grads) cot_f[i] = 2.0 * lam * r * s.c_out * weight / static_cast<double>(d);
        }
        term /= static_cast<double>(d);
        if (grads) {
          Vec cot_in;
          mlp_backward_raw(m.head, cache, cot_f, grads->head, &cot_in);
          for (int i = 0; i < m.head.ctx_dim; ++i)
            (*cot_ctx)[static_cast<size_t>(i)] += cot_in[static_cast<size_t>(m.head.z_dim + i)];
        }
        return term * weight;
      });
}

double rff_train_loss(const ScoreModel& m, const std::vector<const LatentSequence*>& batch,
                      Rng& rng, ScoreModelGrads* grads) {
  const int d = m.head.out_dim;
  return teacher_forced_loss(
      m, batch, grads,
      [&](const Vec& target, const Vec& ctx, double weight, Vec* cot_ctx) {
        const double t = rng.uniform();
        Vec z1(target.size());
        for (auto& v : z1) v = rng.normal();
        Vec zt(target.size());
        for (size_t i = 0; i < target.size(); ++i)
          zt[i] = (1.0 - t) * target[i] + t * z1[i];

        Vec input;
        input.reserve(static_cast<size_t>(m.head.in_dim()));
        input.insert(input.end(), zt.begin(), zt.end());
        input.insert(input.end(), ctx.begin(), ctx.end());
        Vec temb = time_embedding(t, m.head.temb_dim);
        input.insert(input.end(), temb.begin(), temb.end());

        MlpCache cache;
        Vec v = mlp_forward_raw(m.head, input, grads ? &cache : nullptr);
        double term = 0.0;
        Vec cot_v;
        if (grads) cot_v.assign(v.size(), 0.0);
        for (size_t i = 0; i < v.size(); ++i) {
          const double r = v[i] - (z1[i] - target[i]);
          term += r * r;
          if (grads) cot_v[i] = 2.0 * r * weight / static_cast<double>(d);
        }
        term /= static_cast<double>(d);
        if (grads) {
          Vec cot_in;
          mlp_backward_raw(m.head, cache, cot_v, grads->head, &cot_in);
          for (int i = 0; i < m.head.ctx_dim; ++i)
            (*cot_ctx)[static_cast<size_t>(i)] += cot_in[static_cast<size_t>(m.head.z_dim + i)];
        }
        return term * weight;
      });
}

double rff_loss_term(const ScoreModel& m, const Vec& z0, const Vec& z1, double t,
                     const Vec& ctx) {
  Vec zt(z0.size());
  for (size_t i = 0; i < z0.size(); ++i) zt[i] = (1.0 - t) * z0[i] + t * z1[i];
  Vec v = mlp_apply(m.head, zt, t, ctx);
  double acc = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const double r = (z1[i] - z0[i]) - v[i];
    acc += r * r;
  }
  return acc;
}

double model_loglik(const ScoreModel& m, const Vec& z_t, double t, const Vec& ctx,
                    const SolverConfig& cfg, Rng rng, SolveStats* stats) {
  if (!m.process.contains(t))
    throw std::invalid_argument("model_loglik: t outside the process interval");
  ModelOdeField field(m, ctx);
  return log_likelihood_augmented(field, z_t, t, m.process.t_end, m.process.prior_sigma(),
                                  cfg, rng, stats);
}

}  // namespace latentic
