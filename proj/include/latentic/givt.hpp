#ifndef LATENTIC_GIVT_HPP
#define LATENTIC_GIVT_HPP

#include <string>
#include <vector>

#include "latentic/encoder.hpp"
#include "latentic/mlp.hpp"
#include "latentic/sequence.hpp"

namespace latentic {

// GIVT-style baseline: the shared causal encoder feeds an MLP that emits
// parameters of a diagonal-covariance Gaussian mixture over the next frame.
struct GivtModel {
  std::string id;
  EncoderParams encoder;
  MlpParams head;  // ctx -> K * (1 + 2d) raw outputs
  int n_components = 8;
  int dim = 0;
  double sigma_floor = 1e-3;
};

struct GivtGrads {
  EncoderParams encoder;
  MlpParams head;
};

GivtGrads zeros_like(const GivtModel& m);

// Decoded mixture: log weights after softmax, per-component means and
// standard deviations (softplus plus the floor, so always positive).
struct GmmCoeffs {
  Vec log_w;
  std::vector<Vec> mu;
  std::vector<Vec> sigma;
};

GmmCoeffs gmm_decode(const GivtModel& m, const Vec& raw);

// log sum_k w_k prod_i N(z_i; mu_ki, sigma_ki^2), log-sum-exp stabilized.
double gmm_logpdf(const GmmCoeffs& g, const Vec& z);

// Mean over frames of -gmm_logpdf(head(ctx), next frame) / d. Teacher-forced
// and fully deterministic.
double givt_train_loss(const GivtModel& m, const std::vector<const LatentSequence*>& batch,
                       GivtGrads* grads = nullptr);

// Exact IC in bits/dimension; no solver or Monte Carlo error.
double givt_frame_ic(const GivtModel& m, const LatentSequence& seq, int k);

ICCurve givt_ic_curve(const GivtModel& m, const LatentSequence& seq);

}  // namespace latentic

#endif
