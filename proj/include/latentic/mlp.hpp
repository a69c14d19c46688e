#ifndef LATENTIC_MLP_HPP
#define LATENTIC_MLP_HPP

#include <string>
#include <vector>

#include "latentic/rng.hpp"
#include "latentic/vecmath.hpp"

namespace latentic {

// x * sigmoid(x); smooth everywhere so Jacobian traces of fields built from
// this activation are well defined.
inline double silu(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return x * s;
}

inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// Sinusoidal embedding of a scalar conditioning value (log noise scale for the
// EDM head, raw interpolation time for the flow head). dim must be even.
Vec time_embedding(double u, int dim);

// Fully connected stack with SiLU between layers and a linear read-out.
// The conditioned-head convention: input = [z | ctx | time_embedding(t)].
struct MlpParams {
  int z_dim = 0;
  int ctx_dim = 0;
  int temb_dim = 0;
  int out_dim = 0;
  std::vector<Mat> W;
  std::vector<Vec> b;

  int in_dim() const { return z_dim + ctx_dim + temb_dim; }
  int n_layers() const { return static_cast<int>(W.size()); }
};

// Hidden layers all of width `hidden`; final layer zero-initialized so a fresh
// head starts as the zero map.
MlpParams make_mlp(int z_dim, int ctx_dim, int temb_dim, int hidden, int n_hidden,
                   int out_dim, Rng& rng);

// Activations needed to run the backward pass.
struct MlpCache {
  Vec input;
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> post;  // post-activation per layer (post.back() == output)
};

Vec mlp_forward_raw(const MlpParams& p, const Vec& input, MlpCache* cache = nullptr);

// Cotangent of the raw input given a cotangent of the output.
Vec mlp_vjp_raw(const MlpParams& p, const Vec& input, const Vec& cot_out);

// Parameter gradients (accumulated into `grads`, which must be shaped like
// `p`); optionally also returns the input cotangent.
void mlp_backward_raw(const MlpParams& p, const MlpCache& cache, const Vec& cot_out,
                      MlpParams& grads, Vec* cot_input);

// Conditioned-head wrappers assembling [z | ctx | time_embedding(t)].
Vec mlp_apply(const MlpParams& p, const Vec& z, double t, const Vec& ctx);
Vec mlp_vjp(const MlpParams& p, const Vec& z, double t, const Vec& ctx, const Vec& cot_out);

MlpParams zeros_like(const MlpParams& p);

struct ParamRef {
  std::string name;
  std::vector<int> shape;
  std::vector<double>* data;
};
using ParamRefs = std::vector<ParamRef>;

void collect_params(MlpParams& p, const std::string& prefix, ParamRefs& out);

}  // namespace latentic

#endif
