#include "latentic/trainer.hpp"

#include <cmath>
#include <stdexcept>

namespace latentic {

namespace {

EncoderParams build_encoder(const ModelConfig& cfg, Rng& rng) {
  return make_encoder(cfg.dim, cfg.width, cfg.heads, cfg.blocks, cfg.max_seq, rng);
}

}  // namespace

std::string model_kind(const AnyModel& m) {
  if (const auto* sm = std::get_if<ScoreModel>(&m))
    return sm->process.kind == ProcessKind::Edm ? "edm" : "rff";
  return "givt";
}

std::string model_id(const AnyModel& m) {
  if (const auto* sm = std::get_if<ScoreModel>(&m)) return sm->id;
  return std::get<GivtModel>(m).id;
}

int model_dim(const AnyModel& m) {
  if (const auto* sm = std::get_if<ScoreModel>(&m)) return sm->head.out_dim;
  return std::get<GivtModel>(m).dim;
}

int model_max_seq(const AnyModel& m) {
  if (const auto* sm = std::get_if<ScoreModel>(&m)) return sm->encoder.max_seq;
  return std::get<GivtModel>(m).encoder.max_seq;
}

AnyModel make_model(const ModelConfig& cfg, uint64_t seed) {
  Rng rng(seed, Rng::key(0x6d6f64u, 0));
  const int n_hidden = cfg.head_layers - 1;
  if (cfg.kind == "edm" || cfg.kind == "rff") {
    ScoreModel m;
    m.id = cfg.kind;
    m.process = cfg.kind == "edm" ? ProcessSpec::edm() : ProcessSpec::rff();
    m.encoder = build_encoder(cfg, rng);
    m.head = make_mlp(cfg.dim, cfg.width, cfg.temb_dim, cfg.head_hidden, n_hidden, cfg.dim, rng);
    return m;
  }
  if (cfg.kind == "givt") {
    GivtModel m;
    m.id = "givt";
    m.dim = cfg.dim;
    m.n_components = cfg.gmm_components;
    m.sigma_floor = cfg.sigma_floor;
    m.encoder = build_encoder(cfg, rng);
    m.head = make_mlp(0, cfg.width, 0, cfg.head_hidden, n_hidden,
                      cfg.gmm_components * (1 + 2 * cfg.dim), rng);
    return m;
  }
  throw std::invalid_argument("make_model: unknown kind " + cfg.kind);
}

double estimate_sigma_data(const std::vector<LatentSequence>& data) {
  double sum = 0.0, sum2 = 0.0;
  size_t n = 0;
  for (const auto& seq : data)
    for (const auto& f : seq.frames)
      for (double v : f) {
        sum += v;
        sum2 += v * v;
        ++n;
      }
  if (n == 0) throw std::invalid_argument("estimate_sigma_data: empty dataset");
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(1e-12, sum2 / static_cast<double>(n) - mean * mean);
  return std::sqrt(var);
}

ParamRefs model_params(AnyModel& m) {
  ParamRefs refs;
  if (auto* sm = std::get_if<ScoreModel>(&m)) {
    collect_params(sm->encoder, "encoder", refs);
    collect_params(sm->head, "head", refs);
  } else {
    auto& gm = std::get<GivtModel>(m);
    collect_params(gm.encoder, "encoder", refs);
    collect_params(gm.head, "head", refs);
  }
  return refs;
}

namespace {

// Grad containers shaped like the model, plus a registry in matching order.
struct GradSlot {
  ScoreModelGrads diffusion;
  GivtGrads givt;
  ParamRefs refs;
};

GradSlot make_grads(AnyModel& m) {
  GradSlot g;
  if (auto* sm = std::get_if<ScoreModel>(&m)) {
    g.diffusion = zeros_like(*sm);
    collect_params(g.diffusion.encoder, "encoder", g.refs);
    collect_params(g.diffusion.head, "head", g.refs);
  } else {
    g.givt = zeros_like(std::get<GivtModel>(m));
    collect_params(g.givt.encoder, "encoder", g.refs);
    collect_params(g.givt.head, "head", g.refs);
  }
  return g;
}

void zero_grads(GradSlot& g) {
  for (auto& r : g.refs) std::fill(r.data->begin(), r.data->end(), 0.0);
}

LatentSequence crop_sequence(const LatentSequence& seq, int max_len, Rng& rng) {
  if (seq.length() <= max_len) return seq;
  const int start = static_cast<int>(rng.below(static_cast<uint64_t>(seq.length() - max_len + 1)));
  LatentSequence out;
  out.id = seq.id;
  out.frame_rate = seq.frame_rate;
  out.frames.assign(seq.frames.begin() + start, seq.frames.begin() + start + max_len);
  return out;
}

}  // namespace

TrainHistory train_model(AnyModel& m, const std::vector<LatentSequence>& data,
                         const TrainConfig& cfg, uint64_t seed, AdamState& state,
                         const std::function<void(int, double)>& on_step) {
  if (data.empty()) throw std::invalid_argument("train_model: empty dataset");
  ParamRefs params = model_params(m);
  if (state.m.empty()) state = make_adam_state(params);

  GradSlot grads = make_grads(m);
  const int max_len = model_max_seq(m);
  TrainHistory history;

  for (int step = state.step; step < cfg.total_steps; ++step) {
    Rng batch_rng(seed, Rng::key(0xba7c4u, static_cast<uint64_t>(step)));
    std::vector<LatentSequence> cropped;
    cropped.reserve(static_cast<size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& seq = data[batch_rng.below(data.size())];
      cropped.push_back(crop_sequence(seq, max_len, batch_rng));
    }
    std::vector<const LatentSequence*> batch;
    for (const auto& seq : cropped) batch.push_back(&seq);

    zero_grads(grads);
    Rng loss_rng(seed, Rng::key(0x105u, static_cast<uint64_t>(step)));
    double loss;
    if (auto* sm = std::get_if<ScoreModel>(&m)) {
      loss = sm->process.kind == ProcessKind::Edm
                 ? edm_train_loss(*sm, batch, loss_rng, &grads.diffusion)
                 : rff_train_loss(*sm, batch, loss_rng, &grads.diffusion);
    } else {
      loss = givt_train_loss(std::get<GivtModel>(m), batch, &grads.givt);
    }
    train_step(params, grads.refs, state, cfg);
    history.loss.emplace_back(step, loss);
    if (on_step) on_step(step, loss);
  }
  history.final_step = state.step;
  return history;
}

void save_model(const std::filesystem::path& path, AnyModel& m, uint64_t seed,
                const TrainConfig& cfg, const AdamState* adam, bool diverged) {
  nlohmann::json meta;
  meta["kind"] = model_kind(m);
  meta["seed"] = seed;
  meta["step"] = adam ? adam->step : 0;
  meta["diverged"] = diverged;
  meta["train"] = {{"lr", cfg.lr},
                   {"warmup_steps", cfg.warmup_steps},
                   {"total_steps", cfg.total_steps},
                   {"batch_size", cfg.batch_size}};

  ModelConfig arch;
  if (auto* sm = std::get_if<ScoreModel>(&m)) {
    arch.kind = model_kind(m);
    arch.dim = sm->head.out_dim;
    arch.width = sm->encoder.width;
    arch.heads = sm->encoder.heads;
    arch.blocks = static_cast<int>(sm->encoder.blocks.size());
    arch.max_seq = sm->encoder.max_seq;
    arch.head_hidden = sm->head.W.front().rows;
    arch.head_layers = sm->head.n_layers();
    arch.temb_dim = sm->head.temb_dim;
    meta["process"] = {{"t_start", sm->process.t_start},
                       {"t_end", sm->process.t_end},
                       {"sigma_max", sm->process.sigma_max}};
    meta["sigma_data"] = sm->sigma_data;
    meta["model_id"] = sm->id;
  } else {
    auto& gm = std::get<GivtModel>(m);
    arch.kind = "givt";
    arch.dim = gm.dim;
    arch.width = gm.encoder.width;
    arch.heads = gm.encoder.heads;
    arch.blocks = static_cast<int>(gm.encoder.blocks.size());
    arch.max_seq = gm.encoder.max_seq;
    arch.head_hidden = gm.head.W.front().rows;
    arch.head_layers = gm.head.n_layers();
    arch.gmm_components = gm.n_components;
    arch.sigma_floor = gm.sigma_floor;
    meta["model_id"] = gm.id;
  }
  meta["arch"] = {{"dim", arch.dim},
                  {"width", arch.width},
                  {"heads", arch.heads},
                  {"blocks", arch.blocks},
                  {"max_seq", arch.max_seq},
                  {"head_hidden", arch.head_hidden},
                  {"head_layers", arch.head_layers},
                  {"temb_dim", arch.temb_dim},
                  {"gmm_components", arch.gmm_components},
                  {"sigma_floor", arch.sigma_floor}};

  ParamRefs refs = model_params(m);
  std::vector<std::vector<double>> adam_copy;
  if (adam) {
    meta["has_adam"] = true;
    // append moment tensors after the parameters
    adam_copy.reserve(adam->m.size() * 2);
    const size_t n = refs.size();
    for (size_t i = 0; i < n; ++i) {
      adam_copy.push_back(adam->m[i]);
      refs.push_back({"adam_m." + refs[i].name, refs[i].shape, &adam_copy.back()});
    }
    for (size_t i = 0; i < n; ++i) {
      adam_copy.push_back(adam->v[i]);
      refs.push_back({"adam_v." + refs[i].name, refs[i].shape, &adam_copy.back()});
    }
  } else {
    meta["has_adam"] = false;
  }
  save_checkpoint(path, meta, refs);
}

AnyModel load_model(const std::filesystem::path& path, AdamState* adam,
                    nlohmann::json* header_out) {
  nlohmann::json header = peek_checkpoint(path);
  ModelConfig cfg;
  cfg.kind = header.at("kind").get<std::string>();
  const auto& arch = header.at("arch");
  cfg.dim = arch.at("dim").get<int>();
  cfg.width = arch.at("width").get<int>();
  cfg.heads = arch.at("heads").get<int>();
  cfg.blocks = arch.at("blocks").get<int>();
  cfg.max_seq = arch.at("max_seq").get<int>();
  cfg.head_hidden = arch.at("head_hidden").get<int>();
  cfg.head_layers = arch.at("head_layers").get<int>();
  cfg.temb_dim = arch.at("temb_dim").get<int>();
  cfg.gmm_components = arch.at("gmm_components").get<int>();
  cfg.sigma_floor = arch.at("sigma_floor").get<double>();

  AnyModel m = make_model(cfg, 0);
  if (auto* sm = std::get_if<ScoreModel>(&m)) {
    const auto& proc = header.at("process");
    sm->process.t_start = proc.at("t_start").get<double>();
    sm->process.t_end = proc.at("t_end").get<double>();
    sm->process.sigma_max = proc.at("sigma_max").get<double>();
    sm->sigma_data = header.at("sigma_data").get<double>();
    sm->id = header.value("model_id", cfg.kind);
  } else {
    std::get<GivtModel>(m).id = header.value("model_id", std::string("givt"));
  }

  ParamRefs refs = model_params(m);
  const bool has_adam = header.value("has_adam", false);
  std::vector<std::vector<double>> adam_buffers;
  const size_t n = refs.size();
  if (has_adam) {
    adam_buffers.resize(2 * n);
    for (size_t i = 0; i < n; ++i) {
      adam_buffers[i].resize(refs[i].data->size());
      refs.push_back({"adam_m." + refs[i].name, refs[i].shape, &adam_buffers[i]});
    }
    for (size_t i = 0; i < n; ++i) {
      adam_buffers[n + i].resize(refs[i].data->size());
      refs.push_back({"adam_v." + refs[i].name, refs[i].shape, &adam_buffers[n + i]});
    }
  }
  load_checkpoint(path, refs);
  if (adam) {
    if (has_adam) {
      adam->m.assign(adam_buffers.begin(), adam_buffers.begin() + n);
      adam->v.assign(adam_buffers.begin() + n, adam_buffers.end());
    } else {
      ParamRefs base = model_params(m);
      *adam = make_adam_state(base);
    }
    adam->step = header.at("step").get<int>();
  }
  if (header_out) *header_out = header;
  return m;
}

}  // namespace latentic
