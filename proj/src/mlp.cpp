#include "latentic/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace latentic {

Vec time_embedding(double u, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even and >= 2");
  const int half = dim / 2;
  Vec e(static_cast<size_t>(dim));
  for (int i = 0; i < half; ++i) {
    // frequencies log-spaced over three decades
    const double freq = std::pow(1000.0, static_cast<double>(i) / static_cast<double>(half - 1));
    e[static_cast<size_t>(i)] = std::sin(u * freq);
    e[static_cast<size_t>(half + i)] = std::cos(u * freq);
  }
  return e;
}

MlpParams make_mlp(int z_dim, int ctx_dim, int temb_dim, int hidden, int n_hidden,
                   int out_dim, Rng& rng) {
  if (n_hidden < 1) throw std::invalid_argument("make_mlp: need at least one hidden layer");
  MlpParams p;
  p.z_dim = z_dim;
  p.ctx_dim = ctx_dim;
  p.temb_dim = temb_dim;
  p.out_dim = out_dim;
  int in = p.in_dim();
  for (int l = 0; l < n_hidden; ++l) {
    Mat w(hidden, in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& x : w.w) x = scale * rng.normal();
    p.W.push_back(std::move(w));
    p.b.emplace_back(static_cast<size_t>(hidden), 0.0);
    in = hidden;
  }
  p.W.emplace_back(out_dim, in);  // zero-initialized read-out
  p.b.emplace_back(static_cast<size_t>(out_dim), 0.0);
  return p;
}

Vec mlp_forward_raw(const MlpParams& p, const Vec& input, MlpCache* cache) {
  if (static_cast<int>(input.size()) != p.in_dim())
    throw std::invalid_argument("mlp_forward_raw: input dimension mismatch");
  if (cache) {
    cache->input = input;
    cache->pre.clear();
    cache->post.clear();
  }
  Vec x = input;
  const int L = p.n_layers();
  for (int l = 0; l < L; ++l) {
    Vec y(static_cast<size_t>(p.W[l].rows));
    matvec(p.W[l], x.data(), y.data());
    for (size_t i = 0; i < y.size(); ++i) y[i] += p.b[l][i];
    if (cache) cache->pre.push_back(y);
    if (l + 1 < L)
      for (auto& v : y) v = silu(v);
    if (cache) cache->post.push_back(y);
    x = std::move(y);
  }
  return x;
}

Vec mlp_vjp_raw(const MlpParams& p, const Vec& input, const Vec& cot_out) {
  MlpCache cache;
  mlp_forward_raw(p, input, &cache);
  const int L = p.n_layers();
  if (static_cast<int>(cot_out.size()) != p.W[L - 1].rows)
    throw std::invalid_argument("mlp_vjp_raw: cotangent dimension mismatch");
  Vec cot = cot_out;
  for (int l = L - 1; l >= 0; --l) {
    if (l + 1 < L)  // undo the activation of this layer's output
      for (size_t i = 0; i < cot.size(); ++i) cot[i] *= silu_grad(cache.pre[l][i]);
    Vec prev(static_cast<size_t>(p.W[l].cols), 0.0);
    matvec_t_acc(p.W[l], cot.data(), prev.data());
    cot = std::move(prev);
  }
  return cot;
}

void mlp_backward_raw(const MlpParams& p, const MlpCache& cache, const Vec& cot_out,
                      MlpParams& grads, Vec* cot_input) {
  const int L = p.n_layers();
  Vec cot = cot_out;
  for (int l = L - 1; l >= 0; --l) {
    if (l + 1 < L)
      for (size_t i = 0; i < cot.size(); ++i) cot[i] *= silu_grad(cache.pre[l][i]);
    const Vec& x = (l == 0) ? cache.input : cache.post[l - 1];
    outer_acc(grads.W[l], cot.data(), x.data());
    for (size_t i = 0; i < cot.size(); ++i) grads.b[l][i] += cot[i];
    if (l > 0 || cot_input) {
      Vec prev(static_cast<size_t>(p.W[l].cols), 0.0);
      matvec_t_acc(p.W[l], cot.data(), prev.data());
      cot = std::move(prev);
    }
  }
  if (cot_input) *cot_input = std::move(cot);
}

namespace {

Vec assemble_input(const MlpParams& p, const Vec& z, double t, const Vec& ctx) {
  if (static_cast<int>(z.size()) != p.z_dim)
    throw std::invalid_argument("mlp_apply: z dimension mismatch");
  if (static_cast<int>(ctx.size()) != p.ctx_dim)
    throw std::invalid_argument("mlp_apply: ctx dimension mismatch");
  Vec input;
  input.reserve(static_cast<size_t>(p.in_dim()));
  input.insert(input.end(), z.begin(), z.end());
  input.insert(input.end(), ctx.begin(), ctx.end());
  if (p.temb_dim > 0) {
    Vec e = time_embedding(t, p.temb_dim);
    input.insert(input.end(), e.begin(), e.end());
  }
  return input;
}

}  // namespace

Vec mlp_apply(const MlpParams& p, const Vec& z, double t, const Vec& ctx) {
  return mlp_forward_raw(p, assemble_input(p, z, t, ctx));
}

Vec mlp_vjp(const MlpParams& p, const Vec& z, double t, const Vec& ctx, const Vec& cot_out) {
  Vec cot_in = mlp_vjp_raw(p, assemble_input(p, z, t, ctx), cot_out);
  return Vec(cot_in.begin(), cot_in.begin() + p.z_dim);
}

MlpParams zeros_like(const MlpParams& p) {
  MlpParams g;
  g.z_dim = p.z_dim;
  g.ctx_dim = p.ctx_dim;
  g.temb_dim = p.temb_dim;
  g.out_dim = p.out_dim;
  for (const auto& w : p.W) g.W.emplace_back(w.rows, w.cols);
  for (const auto& b : p.b) g.b.emplace_back(b.size(), 0.0);
  return g;
}

void collect_params(MlpParams& p, const std::string& prefix, ParamRefs& out) {
  for (size_t l = 0; l < p.W.size(); ++l) {
    out.push_back({prefix + ".w" + std::to_string(l), {p.W[l].rows, p.W[l].cols}, &p.W[l].w});
    out.push_back({prefix + ".b" + std::to_string(l),
                   {static_cast<int>(p.b[l].size())},
                   &p.b[l]});
  }
}

}  // namespace latentic
