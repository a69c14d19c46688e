#include "latentic/givt.hpp"

#include <cmath>
#include <stdexcept>

#include "latentic/errors.hpp"
#include "latentic/surprisal.hpp"

namespace latentic {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

GivtGrads zeros_like(const GivtModel& m) {
  return GivtGrads{zeros_like(m.encoder), zeros_like(m.head)};
}

GmmCoeffs gmm_decode(const GivtModel& m, const Vec& raw) {
  const int K = m.n_components;
  const int d = m.dim;
  if (static_cast<int>(raw.size()) != K * (1 + 2 * d))
    throw std::invalid_argument("gmm_decode: raw output size mismatch");
  GmmCoeffs g;
  // log-softmax over the first K entries
  double mx = raw[0];
  for (int k = 1; k < K; ++k) mx = std::max(mx, raw[static_cast<size_t>(k)]);
  double norm = 0.0;
  for (int k = 0; k < K; ++k) norm += std::exp(raw[static_cast<size_t>(k)] - mx);
  const double log_norm = mx + std::log(norm);
  g.log_w.resize(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) g.log_w[static_cast<size_t>(k)] = raw[static_cast<size_t>(k)] - log_norm;

  g.mu.assign(static_cast<size_t>(K), Vec(static_cast<size_t>(d)));
  g.sigma.assign(static_cast<size_t>(K), Vec(static_cast<size_t>(d)));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < d; ++i) {
      g.mu[k][i] = raw[static_cast<size_t>(K + k * d + i)];
      g.sigma[k][i] = m.sigma_floor + softplus(raw[static_cast<size_t>(K + K * d + k * d + i)]);
    }
  return g;
}

double gmm_logpdf(const GmmCoeffs& g, const Vec& z) {
  const size_t K = g.log_w.size();
  const size_t d = z.size();
  for (double v : g.log_w)
    if (!std::isfinite(v)) throw std::invalid_argument("gmm_logpdf: non-finite weight");
  double best = -1e300;
  Vec a(K);
  for (size_t k = 0; k < K; ++k) {
    if (g.mu[k].size() != d || g.sigma[k].size() != d)
      throw std::invalid_argument("gmm_logpdf: dimension mismatch");
    double lp = g.log_w[k];
    for (size_t i = 0; i < d; ++i) {
      const double s = g.sigma[k][i];
      if (!(s > 0.0) || !std::isfinite(g.mu[k][i]))
        throw std::invalid_argument("gmm_logpdf: non-finite or non-positive parameters");
      const double r = (z[i] - g.mu[k][i]) / s;
      lp += -0.5 * kLog2Pi - std::log(s) - 0.5 * r * r;
    }
    a[k] = lp;
    best = std::max(best, lp);
  }
  double acc = 0.0;
  for (size_t k = 0; k < K; ++k) acc += std::exp(a[k] - best);
  return best + std::log(acc);
}

double givt_train_loss(const GivtModel& m, const std::vector<const LatentSequence*>& batch,
                       GivtGrads* grads) {
  if (batch.empty()) throw std::invalid_argument("givt_train_loss: empty batch");
  const int K = m.n_components;
  const int d = m.dim;
  int n_frames = 0;
  for (const auto* seq : batch) {
    if (seq->length() < 2) throw std::invalid_argument("givt_train_loss: sequence too short");
    n_frames += seq->length() - 1;
  }
  const double weight = 1.0 / static_cast<double>(n_frames);

  double loss = 0.0;
  for (const auto* seq : batch) {
    EncoderCache cache;
    std::vector<Vec> ctx = encoder_apply(m.encoder, seq->frames, grads ? &cache : nullptr);
    std::vector<Vec> cot_ctx;
    if (grads) cot_ctx.assign(ctx.size(), Vec(static_cast<size_t>(m.encoder.width), 0.0));

    for (int k = 1; k < seq->length(); ++k) {
      const Vec& target = seq->frames[static_cast<size_t>(k)];
      const Vec& c = ctx[static_cast<size_t>(k - 1)];
      MlpCache head_cache;
      Vec raw = mlp_forward_raw(m.head, c, grads ? &head_cache : nullptr);
      GmmCoeffs g = gmm_decode(m, raw);
      const double lp = gmm_logpdf(g, target);
      loss += -lp * weight / static_cast<double>(d);

      if (grads) {
        // responsibilities
        Vec resp(static_cast<size_t>(K));
        for (int kk = 0; kk < K; ++kk) {
          double a = g.log_w[static_cast<size_t>(kk)];
          for (int i = 0; i < d; ++i) {
            const double s = g.sigma[kk][i];
            const double r = (target[static_cast<size_t>(i)] - g.mu[kk][i]) / s;
            a += -0.5 * kLog2Pi - std::log(s) - 0.5 * r * r;
          }
          resp[static_cast<size_t>(kk)] = std::exp(a - lp);
        }
        // d(-logpdf)/d raw, scaled by weight/d
        const double cw = weight / static_cast<double>(d);
        Vec cot_raw(raw.size(), 0.0);
        double resp_sum = 0.0;
        for (int kk = 0; kk < K; ++kk) resp_sum += resp[static_cast<size_t>(kk)];
        for (int kk = 0; kk < K; ++kk) {
          const double w_k = std::exp(g.log_w[static_cast<size_t>(kk)]);
          cot_raw[static_cast<size_t>(kk)] =
              cw * (w_k * resp_sum - resp[static_cast<size_t>(kk)]);
          for (int i = 0; i < d; ++i) {
            const double s = g.sigma[kk][i];
            const double diff = target[static_cast<size_t>(i)] - g.mu[kk][i];
            // d logpdf / d mu = resp * diff / s^2
            cot_raw[static_cast<size_t>(K + kk * d + i)] =
                -cw * resp[static_cast<size_t>(kk)] * diff / (s * s);
            // d logpdf / d sigma = resp * (diff^2/s^3 - 1/s); chain softplus
            const double dsig = resp[static_cast<size_t>(kk)] * (diff * diff / (s * s * s) - 1.0 / s);
            const double praw = raw[static_cast<size_t>(K + K * d + kk * d + i)];
            cot_raw[static_cast<size_t>(K + K * d + kk * d + i)] = -cw * dsig * sigmoid(praw);
          }
        }
        Vec cot_in;
        mlp_backward_raw(m.head, head_cache, cot_raw, grads->head, &cot_in);
        for (size_t i = 0; i < cot_in.size(); ++i) cot_ctx[static_cast<size_t>(k - 1)][i] += cot_in[i];
      }
    }
    if (grads) encoder_backward(m.encoder, cache, cot_ctx, grads->encoder);
  }
  if (!std::isfinite(loss)) throw TrainingDiverged("givt_train_loss: non-finite loss");
  return loss;
}

double givt_frame_ic(const GivtModel& m, const LatentSequence& seq, int k) {
  if (k < 1 || k >= seq.length())
    throw std::invalid_argument("givt_frame_ic: k must be in [1, length)");
  std::vector<Vec> prefix(seq.frames.begin(), seq.frames.begin() + k);
  std::vector<Vec> ctx = encoder_apply(m.encoder, prefix);
  Vec raw = mlp_forward_raw(m.head, ctx.back());
  const double lp = gmm_logpdf(gmm_decode(m, raw), seq.frames[static_cast<size_t>(k)]);
  return bits_per_dim(lp, m.dim);
}

ICCurve givt_ic_curve(const GivtModel& m, const LatentSequence& seq) {
  if (seq.length() < 2) throw std::invalid_argument("givt_ic_curve: sequence too short");
  std::vector<Vec> ctx = encoder_apply(m.encoder, seq.frames);
  ICCurve curve;
  curve.noise_level = 0.0;
  curve.frame_rate = seq.frame_rate;
  curve.model_id = m.id;
  for (int k = 1; k < seq.length(); ++k) {
    Vec raw = mlp_forward_raw(m.head, ctx[static_cast<size_t>(k - 1)]);
    const double lp = gmm_logpdf(gmm_decode(m, raw), seq.frames[static_cast<size_t>(k)]);
    curve.values.push_back(bits_per_dim(lp, m.dim));
  }
  return curve;
}

}  // namespace latentic
