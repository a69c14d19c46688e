#include "latentic/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace latentic {

namespace {

constexpr double kLnEps = 1e-5;

Mat random_mat(int rows, int cols, double scale, Rng& rng) {
  Mat m(rows, cols);
  for (auto& x : m.w) x = scale * rng.normal();
  return m;
}

// y = g * (x - mean)/std + b; returns normalized x_hat and 1/std for backward.
void layer_norm(const Vec& x, const Vec& g, const Vec& b, Vec& y, Vec& x_hat, double& inv) {
  const size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  inv = 1.0 / std::sqrt(var + kLnEps);
  x_hat.resize(n);
  y.resize(n);
  for (size_t i = 0; i < n; ++i) {
    x_hat[i] = (x[i] - mean) * inv;
    y[i] = g[i] * x_hat[i] + b[i];
  }
}

// dx given dy and stored (x_hat, inv); accumulates dg/db.
void layer_norm_backward(const Vec& dy, const Vec& x_hat, double inv, const Vec& g,
                         Vec& dg, Vec& db, Vec& dx) {
  const size_t n = dy.size();
  Vec dxh(n);
  double m1 = 0.0, m2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    dg[i] += dy[i] * x_hat[i];
    db[i] += dy[i];
    dxh[i] = dy[i] * g[i];
    m1 += dxh[i];
    m2 += dxh[i] * x_hat[i];
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  dx.resize(n);
  for (size_t i = 0; i < n; ++i) dx[i] = inv * (dxh[i] - m1 - x_hat[i] * m2);
}

// In-place rotary rotation of one head slice; sign=-1 inverts (for backward).
void rope(double* h, int head_dim, int pos, double base, double sign) {
  const int half = head_dim / 2;
  for (int j = 0; j < half; ++j) {
    const double theta = static_cast<double>(pos) *
                         std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(head_dim));
    const double c = std::cos(theta);
    const double s = sign * std::sin(theta);
    const double x0 = h[2 * j];
    const double x1 = h[2 * j + 1];
    h[2 * j] = c * x0 - s * x1;
    h[2 * j + 1] = s * x0 + c * x1;
  }
}

}  // namespace

EncoderParams make_encoder(int in_dim, int width, int heads, int n_blocks, int max_seq,
                           Rng& rng) {
  if (width % heads != 0) throw std::invalid_argument("make_encoder: width must divide by heads");
  if ((width / heads) % 2 != 0) throw std::invalid_argument("make_encoder: head dim must be even");
  EncoderParams p;
  p.in_dim = in_dim;
  p.width = width;
  p.heads = heads;
  p.max_seq = max_seq;
  const double si = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double sw = 1.0 / std::sqrt(static_cast<double>(width));
  p.Win = random_mat(width, in_dim, si, rng);
  p.bin.assign(static_cast<size_t>(width), 0.0);
  const int ffn = 4 * width;
  for (int blk = 0; blk < n_blocks; ++blk) {
    EncoderBlock b;
    b.ln1_g.assign(static_cast<size_t>(width), 1.0);
    b.ln1_b.assign(static_cast<size_t>(width), 0.0);
    b.Wq = random_mat(width, width, sw, rng);
    b.Wk = random_mat(width, width, sw, rng);
    b.Wv = random_mat(width, width, sw, rng);
    b.Wo = random_mat(width, width, sw, rng);
    b.bq.assign(static_cast<size_t>(width), 0.0);
    b.bk.assign(static_cast<size_t>(width), 0.0);
    b.bv.assign(static_cast<size_t>(width), 0.0);
    b.bo.assign(static_cast<size_t>(width), 0.0);
    b.ln2_g.assign(static_cast<size_t>(width), 1.0);
    b.ln2_b.assign(static_cast<size_t>(width), 0.0);
    b.W1 = random_mat(ffn, width, sw, rng);
    b.b1.assign(static_cast<size_t>(ffn), 0.0);
    b.W2 = random_mat(width, ffn, 1.0 / std::sqrt(static_cast<double>(ffn)), rng);
    b.b2.assign(static_cast<size_t>(width), 0.0);
    p.blocks.push_back(std::move(b));
  }
  p.lnf_g.assign(static_cast<size_t>(width), 1.0);
  p.lnf_b.assign(static_cast<size_t>(width), 0.0);
  return p;
}

std::vector<Vec> encoder_apply(const EncoderParams& p, const std::vector<Vec>& frames,
                               EncoderCache* cache) {
  const int T = static_cast<int>(frames.size());
  if (T == 0) throw std::invalid_argument("encoder_apply: empty sequence");
  if (T > p.max_seq) throw std::invalid_argument("encoder_apply: sequence longer than max_seq");
  const int w = p.width;
  const int H = p.heads;
  const int dh = p.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  if (cache) {
    cache->frames = frames;
    cache->blocks.assign(p.blocks.size(), {});
  }

  std::vector<Vec> x(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    if (static_cast<int>(frames[i].size()) != p.in_dim)
      throw std::invalid_argument("encoder_apply: frame dimension mismatch");
    x[i].resize(static_cast<size_t>(w));
    matvec(p.Win, frames[i].data(), x[i].data());
    for (int c = 0; c < w; ++c) x[i][c] += p.bin[c];
  }

  for (size_t blk = 0; blk < p.blocks.size(); ++blk) {
    const EncoderBlock& B = p.blocks[blk];
    EncoderCache::Block* cb = cache ? &cache->blocks[blk] : nullptr;
    if (cb) {
      cb->x_in = x;
      cb->ln1_hat.resize(T);
      cb->ln1_inv.resize(T);
      cb->q.resize(T);
      cb->k.resize(T);
      cb->v.resize(T);
      cb->probs.resize(T);
      cb->mix.resize(T);
    }

    // attention
    std::vector<Vec> q(T), k(T), v(T);
    for (int i = 0; i < T; ++i) {
      Vec a, a_hat;
      double inv;
      layer_norm(x[i], B.ln1_g, B.ln1_b, a, a_hat, inv);
      if (cb) {
        cb->ln1_hat[i] = a_hat;
        cb->ln1_inv[i] = inv;
      }
      q[i].resize(w);
      k[i].resize(w);
      v[i].resize(w);
      matvec(B.Wq, a.data(), q[i].data());
      matvec(B.Wk, a.data(), k[i].data());
      matvec(B.Wv, a.data(), v[i].data());
      for (int c = 0; c < w; ++c) {
        q[i][c] += B.bq[c];
        k[i][c] += B.bk[c];
        v[i][c] += B.bv[c];
      }
      for (int h = 0; h < H; ++h) {
        rope(q[i].data() + h * dh, dh, i, p.rope_base, 1.0);
        rope(k[i].data() + h * dh, dh, i, p.rope_base, 1.0);
      }
      if (cb) {
        cb->q[i] = q[i];
        cb->k[i] = k[i];
        cb->v[i] = v[i];
      }
    }
    for (int i = 0; i < T; ++i) {
      Vec mix(static_cast<size_t>(w), 0.0);
      Vec probs_row;  // heads * (i+1)
      if (cb) probs_row.resize(static_cast<size_t>(H) * (i + 1));
      for (int h = 0; h < H; ++h) {
        const double* qi = q[i].data() + h * dh;
        // causal scores over j <= i
        Vec s(static_cast<size_t>(i) + 1);
        double smax = -1e300;
        for (int j = 0; j <= i; ++j) {
          const double* kj = k[j].data() + h * dh;
          double acc = 0.0;
          for (int c = 0; c < dh; ++c) acc += qi[c] * kj[c];
          s[j] = acc * scale;
          if (s[j] > smax) smax = s[j];
        }
        double norm = 0.0;
        for (int j = 0; j <= i; ++j) {
          s[j] = std::exp(s[j] - smax);
          norm += s[j];
        }
        for (int j = 0; j <= i; ++j) {
          s[j] /= norm;
          const double* vj = v[j].data() + h * dh;
          double* mh = mix.data() + h * dh;
          for (int c = 0; c < dh; ++c) mh[c] += s[j] * vj[c];
        }
        if (cb)
          for (int j = 0; j <= i; ++j) probs_row[static_cast<size_t>(h) * (i + 1) + j] = s[j];
      }
      if (cb) {
        cb->probs[i] = std::move(probs_row);
        cb->mix[i] = mix;
      }
      Vec attn_out(static_cast<size_t>(w));
      matvec(B.Wo, mix.data(), attn_out.data());
      for (int c = 0; c < w; ++c) x[i][c] += attn_out[c] + B.bo[c];
    }
    if (cb) {
      cb->x_mid = x;
      cb->ln2_hat.resize(T);
      cb->ln2_inv.resize(T);
      cb->ffn_pre.resize(T);
      cb->ffn_act.resize(T);
    }

    // feed-forward
    for (int i = 0; i < T; ++i) {
      Vec a, a_hat;
      double inv;
      layer_norm(x[i], B.ln2_g, B.ln2_b, a, a_hat, inv);
      Vec h(static_cast<size_t>(B.W1.rows));
      matvec(B.W1, a.data(), h.data());
      for (size_t c = 0; c < h.size(); ++c) h[c] += B.b1[c];
      if (cb) {
        cb->ln2_hat[i] = a_hat;
        cb->ln2_inv[i] = inv;
        cb->ffn_pre[i] = h;
      }
      for (auto& val : h) val = silu(val);
      if (cb) cb->ffn_act[i] = h;
      Vec out(static_cast<size_t>(w));
      matvec(B.W2, h.data(), out.data());
      for (int c = 0; c < w; ++c) x[i][c] += out[c] + B.b2[c];
    }
  }

  if (cache) {
    cache->x_final = x;
    cache->lnf_hat.resize(T);
    cache->lnf_inv.resize(T);
  }
  std::vector<Vec> ctx(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    Vec hat;
    double inv;
    layer_norm(x[i], p.lnf_g, p.lnf_b, ctx[i], hat, inv);
    if (cache) {
      cache->lnf_hat[i] = std::move(hat);
      cache->lnf_inv[i] = inv;
    }
  }
  return ctx;
}

void encoder_backward(const EncoderParams& p, const EncoderCache& cache,
                      const std::vector<Vec>& cot_ctx, EncoderParams& grads) {
  const int T = static_cast<int>(cache.frames.size());
  const int w = p.width;
  const int H = p.heads;
  const int dh = p.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // final layer norm
  std::vector<Vec> dx(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i)
    layer_norm_backward(cot_ctx[i], cache.lnf_hat[i], cache.lnf_inv[i], p.lnf_g,
                        grads.lnf_g, grads.lnf_b, dx[i]);

  for (int blk = static_cast<int>(p.blocks.size()) - 1; blk >= 0; --blk) {
    const EncoderBlock& B = p.blocks[blk];
    const EncoderCache::Block& cb = cache.blocks[blk];
    EncoderBlock& G = grads.blocks[blk];

    // feed-forward backward (residual: dx flows through unchanged plus branch)
    for (int i = 0; i < T; ++i) {
      const Vec& dout = dx[i];
      for (int c = 0; c < w; ++c) G.b2[c] += dout[c];
      outer_acc(G.W2, dout.data(), cb.ffn_act[i].data());
      Vec dh_act(static_cast<size_t>(B.W1.rows), 0.0);
      matvec_t_acc(B.W2, dout.data(), dh_act.data());
      for (size_t c = 0; c < dh_act.size(); ++c) dh_act[c] *= silu_grad(cb.ffn_pre[i][c]);
      for (size_t c = 0; c < dh_act.size(); ++c) G.b1[c] += dh_act[c];
      // LN2 output a = ln2_hat*g+b; recompute a for the W1 outer product
      Vec a(static_cast<size_t>(w));
      for (int c = 0; c < w; ++c) a[c] = B.ln2_g[c] * cb.ln2_hat[i][c] + B.ln2_b[c];
      outer_acc(G.W1, dh_act.data(), a.data());
      Vec da(static_cast<size_t>(w), 0.0);
      matvec_t_acc(B.W1, dh_act.data(), da.data());
      Vec dmid;
      layer_norm_backward(da, cb.ln2_hat[i], cb.ln2_inv[i], B.ln2_g, G.ln2_g, G.ln2_b, dmid);
      for (int c = 0; c < w; ++c) dx[i][c] += dmid[c];
    }

    // attention backward
    std::vector<Vec> dq(T, Vec(static_cast<size_t>(w), 0.0));
    std::vector<Vec> dk(T, Vec(static_cast<size_t>(w), 0.0));
    std::vector<Vec> dv(T, Vec(static_cast<size_t>(w), 0.0));
    for (int i = 0; i < T; ++i) {
      const Vec& dout = dx[i];
      for (int c = 0; c < w; ++c) G.bo[c] += dout[c];
      outer_acc(G.Wo, dout.data(), cb.mix[i].data());
      Vec dmix(static_cast<size_t>(w), 0.0);
      matvec_t_acc(B.Wo, dout.data(), dmix.data());
      for (int h = 0; h < H; ++h) {
        const double* dmh = dmix.data() + h * dh;
        const double* qi = cb.q[i].data() + h * dh;
        const double* pr = cb.probs[i].data() + static_cast<size_t>(h) * (i + 1);
        // d probs and the softmax Jacobian
        Vec dp(static_cast<size_t>(i) + 1);
        double inner = 0.0;
        for (int j = 0; j <= i; ++j) {
          const double* vj = cb.v[j].data() + h * dh;
          double acc = 0.0;
          for (int c = 0; c < dh; ++c) acc += dmh[c] * vj[c];
          dp[j] = acc;
          inner += pr[j] * acc;
        }
        for (int j = 0; j <= i; ++j) {
          const double ds = pr[j] * (dp[j] - inner);
          const double* kj = cb.k[j].data() + h * dh;
          double* dqi = dq[i].data() + h * dh;
          double* dkj = dk[j].data() + h * dh;
          double* dvj = dv[j].data() + h * dh;
          const double* vsrc = cb.v[j].data() + h * dh;
          (void)vsrc;
          for (int c = 0; c < dh; ++c) {
            dqi[c] += ds * scale * kj[c];
            dkj[c] += ds * scale * qi[c];
            dvj[c] += pr[j] * dmh[c];
          }
        }
      }
    }
    for (int i = 0; i < T; ++i) {
      for (int h = 0; h < H; ++h) {
        rope(dq[i].data() + h * dh, dh, i, p.rope_base, -1.0);
        rope(dk[i].data() + h * dh, dh, i, p.rope_base, -1.0);
      }
      for (int c = 0; c < w; ++c) {
        G.bq[c] += dq[i][c];
        G.bk[c] += dk[i][c];
        G.bv[c] += dv[i][c];
      }
      Vec a(static_cast<size_t>(w));
      for (int c = 0; c < w; ++c) a[c] = B.ln1_g[c] * cb.ln1_hat[i][c] + B.ln1_b[c];
      outer_acc(G.Wq, dq[i].data(), a.data());
      outer_acc(G.Wk, dk[i].data(), a.data());
      outer_acc(G.Wv, dv[i].data(), a.data());
      Vec da(static_cast<size_t>(w), 0.0);
      matvec_t_acc(B.Wq, dq[i].data(), da.data());
      matvec_t_acc(B.Wk, dk[i].data(), da.data());
      matvec_t_acc(B.Wv, dv[i].data(), da.data());
      Vec din;
      layer_norm_backward(da, cb.ln1_hat[i], cb.ln1_inv[i], B.ln1_g, G.ln1_g, G.ln1_b, din);
      for (int c = 0; c < w; ++c) dx[i][c] += din[c];
    }
  }

  // input projection
  for (int i = 0; i < T; ++i) {
    outer_acc(grads.Win, dx[i].data(), cache.frames[i].data());
    for (int c = 0; c < w; ++c) grads.bin[c] += dx[i][c];
  }
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams g;
  g.in_dim = p.in_dim;
  g.width = p.width;
  g.heads = p.heads;
  g.max_seq = p.max_seq;
  g.rope_base = p.rope_base;
  g.Win = Mat(p.Win.rows, p.Win.cols);
  g.bin.assign(p.bin.size(), 0.0);
  for (const auto& b : p.blocks) {
    EncoderBlock z;
    z.ln1_g.assign(b.ln1_g.size(), 0.0);
    z.ln1_b.assign(b.ln1_b.size(), 0.0);
    z.Wq = Mat(b.Wq.rows, b.Wq.cols);
    z.Wk = Mat(b.Wk.rows, b.Wk.cols);
    z.Wv = Mat(b.Wv.rows, b.Wv.cols);
    z.Wo = Mat(b.Wo.rows, b.Wo.cols);
    z.bq.assign(b.bq.size(), 0.0);
    z.bk.assign(b.bk.size(), 0.0);
    z.bv.assign(b.bv.size(), 0.0);
    z.bo.assign(b.bo.size(), 0.0);
    z.ln2_g.assign(b.ln2_g.size(), 0.0);
    z.ln2_b.assign(b.ln2_b.size(), 0.0);
    z.W1 = Mat(b.W1.rows, b.W1.cols);
    z.b1.assign(b.b1.size(), 0.0);
    z.W2 = Mat(b.W2.rows, b.W2.cols);
    z.b2.assign(b.b2.size(), 0.0);
    g.blocks.push_back(std::move(z));
  }
  g.lnf_g.assign(p.lnf_g.size(), 0.0);
  g.lnf_b.assign(p.lnf_b.size(), 0.0);
  return g;
}

void collect_params(EncoderParams& p, const std::string& prefix, ParamRefs& out) {
  auto mat = [&](const std::string& name, Mat& m) {
    out.push_back({prefix + "." + name, {m.rows, m.cols}, &m.w});
  };
  auto vec = [&](const std::string& name, Vec& v) {
    out.push_back({prefix + "." + name, {static_cast<int>(v.size())}, &v});
  };
  mat("win", p.Win);
  vec("bin", p.bin);
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    EncoderBlock& b = p.blocks[i];
    const std::string bp = "blk" + std::to_string(i);
    auto bmat = [&](const std::string& n, Mat& m) { mat(bp + "." + n, m); };
    auto bvec = [&](const std::string& n, Vec& v) { vec(bp + "." + n, v); };
    bvec("ln1_g", b.ln1_g);
    bvec("ln1_b", b.ln1_b);
    bmat("wq", b.Wq);
    bmat("wk", b.Wk);
    bmat("wv", b.Wv);
    bmat("wo", b.Wo);
    bvec("bq", b.bq);
    bvec("bk", b.bk);
    bvec("bv", b.bv);
    bvec("bo", b.bo);
    bvec("ln2_g", b.ln2_g);
    bvec("ln2_b", b.ln2_b);
    bmat("w1", b.W1);
    bvec("b1", b.b1);
    bmat("w2", b.W2);
    bvec("b2", b.b2);
  }
  vec("lnf_g", p.lnf_g);
  vec("lnf_b", p.lnf_b);
}

}  // namespace latentic
