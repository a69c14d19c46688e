#ifndef LATENTIC_ENCODER_HPP
#define LATENTIC_ENCODER_HPP

#include <string>
#include <vector>

#include "latentic/mlp.hpp"
#include "latentic/rng.hpp"
#include "latentic/vecmath.hpp"

namespace latentic {

// Pre-layer-norm block: x += Attn(LN1(x)); x += FFN(LN2(x)).
struct EncoderBlock {
  Vec ln1_g, ln1_b;
  Mat Wq, Wk, Wv, Wo;
  Vec bq, bk, bv, bo;
  Vec ln2_g, ln2_b;
  Mat W1;
  Vec b1;
  Mat W2;
  Vec b2;
};

// Causal transformer summarizing past frames into context states. The output
// at position k depends on frames[0..k] only; it is the state used to predict
// frame k+1.
struct EncoderParams {
  int in_dim = 0;
  int width = 0;
  int heads = 0;
  int max_seq = 0;
  double rope_base = 10000.0;
  Mat Win;
  Vec bin;
  std::vector<EncoderBlock> blocks;
  Vec lnf_g, lnf_b;

  int head_dim() const { return width / heads; }
};

EncoderParams make_encoder(int in_dim, int width, int heads, int n_blocks, int max_seq,
                           Rng& rng);

// Everything the backward pass needs, laid out per block.
struct EncoderCache {
  struct Block {
    std::vector<Vec> x_in;          // residual-stream input
    std::vector<Vec> ln1_hat;       // normalized LN1 activations
    Vec ln1_inv;                    // per-position 1/std
    std::vector<Vec> q, k, v;       // post-RoPE q/k and raw v, width-wide
    std::vector<Vec> probs;         // per position: heads*(pos+1) attention weights
    std::vector<Vec> mix;           // concatenated head mixes
    std::vector<Vec> x_mid;         // after the attention residual
    std::vector<Vec> ln2_hat;
    Vec ln2_inv;
    std::vector<Vec> ffn_pre;       // W1 pre-activations
    std::vector<Vec> ffn_act;       // silu(W1 ...)
  };
  std::vector<Vec> frames;
  std::vector<Block> blocks;
  std::vector<Vec> x_final;
  std::vector<Vec> lnf_hat;
  Vec lnf_inv;
};

// Context vector per position (cache optional, for training).
std::vector<Vec> encoder_apply(const EncoderParams& p, const std::vector<Vec>& frames,
                               EncoderCache* cache = nullptr);

// Accumulates parameter gradients given cotangents of the context outputs.
void encoder_backward(const EncoderParams& p, const EncoderCache& cache,
                      const std::vector<Vec>& cot_ctx, EncoderParams& grads);

EncoderParams zeros_like(const EncoderParams& p);

void collect_params(EncoderParams& p, const std::string& prefix, ParamRefs& out);

}  // namespace latentic

#endif
