#include "latentic/commands.hpp"

#include <fstream>
#include <iostream>
#include <set>

namespace latentic {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream os(out_dir / "resolved_config.json", std::ios::trunc);
  os << run_config_json(cfg).dump(2) << "\n";
}

std::vector<AnyModel> load_models(const std::vector<std::filesystem::path>& checkpoints,
                                  int expect_dim) {
  if (checkpoints.empty()) throw std::invalid_argument("no --checkpoint given");
  std::vector<AnyModel> models;
  for (const auto& path : checkpoints) {
    AnyModel m = load_model(path);
    if (model_dim(m) != expect_dim)
      throw std::invalid_argument("dim: checkpoint " + path.string() + " has dim " +
                                  std::to_string(model_dim(m)) + " but dataset has dim " +
                                  std::to_string(expect_dim));
    models.push_back(std::move(m));
  }
  return models;
}

std::vector<ModelRef> make_refs(std::vector<AnyModel>& models, const RunConfig& cfg,
                                bool segmentation) {
  std::vector<ModelRef> refs;
  std::set<std::string> seen;
  for (auto& m : models) {
    ModelRef r;
    const std::string kind = model_kind(m);
    r.id = model_id(m);
    if (seen.count(r.id)) r.id += "_" + std::to_string(seen.size());
    seen.insert(r.id);
    if (auto* sm = std::get_if<ScoreModel>(&m)) {
      r.diffusion = sm;
      r.levels = cfg.levels_for(kind, segmentation);
    } else {
      r.givt = &std::get<GivtModel>(m);
    }
    refs.push_back(std::move(r));
  }
  return refs;
}

std::vector<LatentSequence> load_data_checked(const std::filesystem::path& dir, int dim) {
  std::vector<LatentSequence> data = load_dataset(dir);
  if (data.empty()) throw std::invalid_argument("dataset " + dir.string() + " is empty");
  for (const auto& seq : data)
    if (seq.dim() != dim)
      throw std::invalid_argument("dim: dataset " + dir.string() + " has dim " +
                                  std::to_string(seq.dim()) + ", config expects " +
                                  std::to_string(dim));
  return data;
}

}  // namespace

SolverConfig RunConfig::solver_config() const {
  SolverConfig c;
  c.atol = c.rtol = solver.tol;
  c.n_r = solver.n_r;
  c.max_steps = solver.max_steps;
  c.mode = solver.divergence == "exact" ? DivergenceMode::Exact : DivergenceMode::Hutchinson;
  return c;
}

NoveltyConfig RunConfig::novelty_config() const {
  NoveltyConfig n;
  n.sigma = experiment.novelty_sigma;
  n.window = experiment.peak_window;
  n.kappa = experiment.peak_kappa;
  return n;
}

GeneratorSpec RunConfig::generator_spec() const {
  GeneratorSpec spec = make_generator_spec(Rng(seed, Rng::key(0x67656eu, 0)));
  spec.n_symbols = data.n_symbols;
  spec.frames_per_symbol = data.frames_per_symbol;
  spec.dim = data.dim;
  spec.coarse_dim = data.coarse_dim;
  spec.frame_rate = data.frame_rate;
  spec.fine_amp = data.fine_amp;
  spec.coarse_jitter = data.coarse_jitter;
  spec.symbols_per_section = data.symbols_per_section;
  if (spec.n_symbols != 8 || spec.coarse_dim != 4) {
    // rebuild embeddings and transitions for non-default sizes
    GeneratorSpec fresh;
    fresh.n_symbols = spec.n_symbols;
    fresh.coarse_dim = spec.coarse_dim;
    if (spec.n_symbols > (1 << spec.coarse_dim))
      throw std::invalid_argument("config: n_symbols exceeds 2^coarse_dim");
    spec.embedding.clear();
    for (int s = 0; s < spec.n_symbols; ++s) {
      Vec e(static_cast<size_t>(spec.coarse_dim));
      for (int c = 0; c < spec.coarse_dim; ++c) e[c] = (s >> c) & 1 ? 0.5 : -0.5;
      spec.embedding.push_back(std::move(e));
    }
    Rng trng(seed, Rng::key(0x67656eu, 1));
    spec.transitions = random_transitions(spec.n_symbols, trng);
  }
  return spec;
}

std::vector<double> RunConfig::levels_for(const std::string& kind, bool segmentation) const {
  if (kind == "edm") return segmentation ? experiment.seg_levels_edm : experiment.noise_levels_edm;
  if (kind == "rff") return segmentation ? experiment.seg_levels_rff : experiment.noise_levels_rff;
  return {};
}

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  reject_unknown(j, {"seed", "data", "model", "train", "solver", "experiment"}, "top level");
  get_if_present(j, "seed", cfg.seed);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    reject_unknown(d,
                   {"n_symbols", "frames_per_symbol", "dim", "coarse_dim", "frame_rate",
                    "fine_amp", "coarse_jitter", "length_symbols", "timbres",
                    "n_materials_train", "n_materials_val", "n_materials_corr",
                    "n_segmented_train", "n_segmented_eval", "sections",
                    "symbols_per_section"},
                   "data");
    get_if_present(d, "n_symbols", cfg.data.n_symbols);
    get_if_present(d, "frames_per_symbol", cfg.data.frames_per_symbol);
    get_if_present(d, "dim", cfg.data.dim);
    get_if_present(d, "coarse_dim", cfg.data.coarse_dim);
    get_if_present(d, "frame_rate", cfg.data.frame_rate);
    get_if_present(d, "fine_amp", cfg.data.fine_amp);
    get_if_present(d, "coarse_jitter", cfg.data.coarse_jitter);
    get_if_present(d, "length_symbols", cfg.data.length_symbols);
    get_if_present(d, "timbres", cfg.data.timbres);
    get_if_present(d, "n_materials_train", cfg.data.n_materials_train);
    get_if_present(d, "n_materials_val", cfg.data.n_materials_val);
    get_if_present(d, "n_materials_corr", cfg.data.n_materials_corr);
    get_if_present(d, "n_segmented_train", cfg.data.n_segmented_train);
    get_if_present(d, "n_segmented_eval", cfg.data.n_segmented_eval);
    get_if_present(d, "sections", cfg.data.sections);
    get_if_present(d, "symbols_per_section", cfg.data.symbols_per_section);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m,
                   {"kind", "dim", "width", "heads", "blocks", "max_seq", "head_hidden",
                    "head_layers", "temb_dim", "gmm_components", "sigma_floor"},
                   "model");
    get_if_present(m, "kind", cfg.model.kind);
    get_if_present(m, "dim", cfg.model.dim);
    get_if_present(m, "width", cfg.model.width);
    get_if_present(m, "heads", cfg.model.heads);
    get_if_present(m, "blocks", cfg.model.blocks);
    get_if_present(m, "max_seq", cfg.model.max_seq);
    get_if_present(m, "head_hidden", cfg.model.head_hidden);
    get_if_present(m, "head_layers", cfg.model.head_layers);
    get_if_present(m, "temb_dim", cfg.model.temb_dim);
    get_if_present(m, "gmm_components", cfg.model.gmm_components);
    get_if_present(m, "sigma_floor", cfg.model.sigma_floor);
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t, {"lr", "warmup_steps", "total_steps", "batch_size", "beta1", "beta2", "eps"},
                   "train");
    get_if_present(t, "lr", cfg.train.lr);
    get_if_present(t, "warmup_steps", cfg.train.warmup_steps);
    get_if_present(t, "total_steps", cfg.train.total_steps);
    get_if_present(t, "batch_size", cfg.train.batch_size);
    get_if_present(t, "beta1", cfg.train.beta1);
    get_if_present(t, "beta2", cfg.train.beta2);
    get_if_present(t, "eps", cfg.train.eps);
    if (cfg.train.warmup_steps >= cfg.train.total_steps)
      throw std::invalid_argument("config: warmup_steps must be < total_steps");
  }

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown(s, {"tol", "n_r", "max_steps", "divergence"}, "solver");
    get_if_present(s, "tol", cfg.solver.tol);
    get_if_present(s, "n_r", cfg.solver.n_r);
    get_if_present(s, "max_steps", cfg.solver.max_steps);
    get_if_present(s, "divergence", cfg.solver.divergence);
    if (cfg.solver.divergence != "exact" && cfg.solver.divergence != "hutchinson")
      throw std::invalid_argument("config: divergence must be 'exact' or 'hutchinson'");
  }

  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    reject_unknown(e,
                   {"noise_levels_edm", "noise_levels_rff", "seg_levels_edm", "seg_levels_rff",
                    "error_n_r", "error_tols", "error_max_frames", "trim_fraction",
                    "novelty_sigma", "peak_window", "peak_kappa",
                    "boundary_window_seconds", "permutation_shuffles"},
                   "experiment");
    get_if_present(e, "noise_levels_edm", cfg.experiment.noise_levels_edm);
    get_if_present(e, "noise_levels_rff", cfg.experiment.noise_levels_rff);
    get_if_present(e, "seg_levels_edm", cfg.experiment.seg_levels_edm);
    get_if_present(e, "seg_levels_rff", cfg.experiment.seg_levels_rff);
    get_if_present(e, "error_n_r", cfg.experiment.error_n_r);
    get_if_present(e, "error_tols", cfg.experiment.error_tols);
    get_if_present(e, "error_max_frames", cfg.experiment.error_max_frames);
    get_if_present(e, "trim_fraction", cfg.experiment.trim_fraction);
    get_if_present(e, "novelty_sigma", cfg.experiment.novelty_sigma);
    get_if_present(e, "peak_window", cfg.experiment.peak_window);
    get_if_present(e, "peak_kappa", cfg.experiment.peak_kappa);
    get_if_present(e, "boundary_window_seconds", cfg.experiment.boundary_window_seconds);
    get_if_present(e, "permutation_shuffles", cfg.experiment.permutation_shuffles);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path.string());
  nlohmann::json j;
  is >> j;
  return parse_run_config(j);
}

nlohmann::json run_config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["data"] = {{"n_symbols", cfg.data.n_symbols},
               {"frames_per_symbol", cfg.data.frames_per_symbol},
               {"dim", cfg.data.dim},
               {"coarse_dim", cfg.data.coarse_dim},
               {"frame_rate", cfg.data.frame_rate},
               {"fine_amp", cfg.data.fine_amp},
               {"coarse_jitter", cfg.data.coarse_jitter},
               {"length_symbols", cfg.data.length_symbols},
               {"timbres", cfg.data.timbres},
               {"n_materials_train", cfg.data.n_materials_train},
               {"n_materials_val", cfg.data.n_materials_val},
               {"n_materials_corr", cfg.data.n_materials_corr},
               {"n_segmented_train", cfg.data.n_segmented_train},
               {"n_segmented_eval", cfg.data.n_segmented_eval},
               {"sections", cfg.data.sections},
               {"symbols_per_section", cfg.data.symbols_per_section}};
  j["model"] = {{"kind", cfg.model.kind},
                {"dim", cfg.model.dim},
                {"width", cfg.model.width},
                {"heads", cfg.model.heads},
                {"blocks", cfg.model.blocks},
                {"max_seq", cfg.model.max_seq},
                {"head_hidden", cfg.model.head_hidden},
                {"head_layers", cfg.model.head_layers},
                {"temb_dim", cfg.model.temb_dim},
                {"gmm_components", cfg.model.gmm_components},
                {"sigma_floor", cfg.model.sigma_floor}};
  j["train"] = {{"lr", cfg.train.lr},
                {"warmup_steps", cfg.train.warmup_steps},
                {"total_steps", cfg.train.total_steps},
                {"batch_size", cfg.train.batch_size},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"eps", cfg.train.eps}};
  j["solver"] = {{"tol", cfg.solver.tol},
                 {"n_r", cfg.solver.n_r},
                 {"max_steps", cfg.solver.max_steps},
                 {"divergence", cfg.solver.divergence}};
  j["experiment"] = {{"noise_levels_edm", cfg.experiment.noise_levels_edm},
                     {"noise_levels_rff", cfg.experiment.noise_levels_rff},
                     {"seg_levels_edm", cfg.experiment.seg_levels_edm},
                     {"seg_levels_rff", cfg.experiment.seg_levels_rff},
                     {"error_n_r", cfg.experiment.error_n_r},
                     {"error_tols", cfg.experiment.error_tols},
                     {"error_max_frames", cfg.experiment.error_max_frames},
                     {"trim_fraction", cfg.experiment.trim_fraction},
                     {"novelty_sigma", cfg.experiment.novelty_sigma},
                     {"peak_window", cfg.experiment.peak_window},
                     {"peak_kappa", cfg.experiment.peak_kappa},
                     {"boundary_window_seconds", cfg.experiment.boundary_window_seconds},
                     {"permutation_shuffles", cfg.experiment.permutation_shuffles}};
  return j;
}

int run_gen(const RunConfig& cfg, const std::filesystem::path& out) {
  const GeneratorSpec spec = cfg.generator_spec();
  nlohmann::json manifest;
  manifest["seed"] = cfg.seed;

  auto pitch_set = [&](int first_material, int count) {
    std::vector<LatentSequence> seqs;
    for (int m = 0; m < count; ++m)
      for (int timbre : cfg.data.timbres)
        seqs.push_back(gen_pitch_timbre(spec, cfg.data.length_symbols, timbre,
                                        Rng(cfg.seed, Rng::key(0xda7au, first_material + m))));
    return seqs;
  };
  auto segmented_set = [&](int first, int count) {
    std::vector<LatentSequence> seqs;
    for (int s = 0; s < count; ++s)
      seqs.push_back(
          gen_segmented(spec, cfg.data.sections, Rng(cfg.seed, Rng::key(0x5e6du, first + s))));
    return seqs;
  };

  std::vector<LatentSequence> train = pitch_set(0, cfg.data.n_materials_train);
  for (auto& s : segmented_set(0, cfg.data.n_segmented_train)) train.push_back(std::move(s));
  std::vector<LatentSequence> val = pitch_set(1000, cfg.data.n_materials_val);
  std::vector<LatentSequence> corr = pitch_set(2000, cfg.data.n_materials_corr);
  std::vector<LatentSequence> seg = segmented_set(1000, cfg.data.n_segmented_eval);

  save_dataset(train, out / "train");
  save_dataset(val, out / "val");
  save_dataset(corr, out / "corr");
  save_dataset(seg, out / "seg");

  manifest["counts"] = {{"train", train.size()},
                        {"val", val.size()},
                        {"corr", corr.size()},
                        {"seg", seg.size()}};
  std::ofstream ms(out / "manifest.json", std::ios::trunc);
  ms << manifest.dump(2) << "\n";
  write_resolved_config(cfg, out);
  std::cout << "gen: wrote " << train.size() << " train, " << val.size() << " val, "
            << corr.size() << " corr, " << seg.size() << " seg sequences to " << out << "\n";
  return 0;
}

int run_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
              const std::filesystem::path& out, const std::filesystem::path& resume) {
  std::vector<LatentSequence> data = load_data_checked(data_dir, cfg.model.dim);
  std::filesystem::create_directories(out);

  AnyModel model = resume.empty() ? make_model(cfg.model, cfg.seed) : AnyModel{};
  AdamState adam;
  if (!resume.empty()) {
    model = load_model(resume, &adam);
  } else if (auto* sm = std::get_if<ScoreModel>(&model)) {
    sm->sigma_data = estimate_sigma_data(data);
  }

  const std::filesystem::path ckpt = out / (model_kind(model) + ".ckpt");
  std::ofstream hist(out / "loss_history.csv",
                     resume.empty() ? std::ios::trunc : std::ios::app);
  if (resume.empty()) hist << "step,loss\n";

  bool diverged = false;
  try {
    train_model(model, data, cfg.train, cfg.seed, adam, [&](int step, double loss) {
      hist << step << "," << format_number(loss) << "\n";
    });
  } catch (const TrainingDiverged& e) {
    std::cerr << "train: diverged: " << e.what() << "\n";
    diverged = true;
  }
  save_model(ckpt, model, cfg.seed, cfg.train, &adam, diverged);
  write_resolved_config(cfg, out);
  std::cout << "train: " << model_kind(model) << " to step " << adam.step << ", checkpoint "
            << ckpt << (diverged ? " (diverged)" : "") << "\n";
  return diverged ? 1 : 0;
}

int run_ic(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
           const std::filesystem::path& data_dir, const std::filesystem::path& out) {
  std::vector<LatentSequence> data = load_data_checked(data_dir, cfg.model.dim);
  std::vector<AnyModel> models = load_models(checkpoints, data.front().dim());
  std::filesystem::create_directories(out);
  const SolverConfig solver = cfg.solver_config();

  std::vector<ModelRef> refs = make_refs(models, cfg, false);
  for (const ModelRef& ref : refs) {
    const std::vector<double> levels = ref.is_diffusion() ? ref.levels : std::vector<double>{0.0};
    for (size_t si = 0; si < data.size(); ++si) {
      std::vector<std::pair<std::string, Vec>> series;
      for (double t : levels) {
        ICCurve curve = model_ic_curve(ref, data[si], t, solver, cfg.seed);
        char name[128];
        std::snprintf(name, sizeof(name), "ic_%s_seq%03zu_t%s.csv", ref.id.c_str(), si,
                      ref.is_diffusion() ? format_number(t).c_str() : "na");
        write_ic_csv(curve, out / name, solver, cfg.seed);
        series.emplace_back("t=" + format_number(t), curve.values);
      }
      char svg[128];
      std::snprintf(svg, sizeof(svg), "ic_%s_seq%03zu.svg", ref.id.c_str(), si);
      write_svg_lines(out / svg, series, ref.id + " IC (bits/dim)");
    }
  }
  write_resolved_config(cfg, out);
  return 0;
}

int run_nll(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
            const std::filesystem::path& data_dir, const std::filesystem::path& out) {
  std::vector<LatentSequence> data = load_data_checked(data_dir, cfg.model.dim);
  std::vector<AnyModel> models = load_models(checkpoints, data.front().dim());
  std::filesystem::create_directories(out);
  std::vector<ModelRef> refs = make_refs(models, cfg, false);
  ExperimentReport report = nll_experiment(refs, data, cfg.experiment.trim_fraction,
                                           cfg.solver_config(), cfg.seed);
  write_csv(report, out / "nll.csv");
  write_resolved_config(cfg, out);
  return 0;
}

int run_errors(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
               const std::filesystem::path& data_dir, const std::filesystem::path& out) {
  std::vector<LatentSequence> data = load_data_checked(data_dir, cfg.model.dim);
  std::vector<AnyModel> models = load_models(checkpoints, data.front().dim());
  std::filesystem::create_directories(out);
  bool any = false;
  for (auto& m : models) {
    if (auto* sm = std::get_if<ScoreModel>(&m)) {
      ExperimentReport report =
          error_experiment(*sm, data, cfg.experiment.error_max_frames,
                           cfg.experiment.error_n_r, cfg.experiment.error_tols, cfg.seed);
      write_csv(report, out / ("errors_" + sm->id + ".csv"));
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("errors: no diffusion checkpoint given");
  write_resolved_config(cfg, out);
  return 0;
}

int run_correlate(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out) {
  std::vector<LatentSequence> data = load_data_checked(data_dir, cfg.model.dim);
  std::vector<AnyModel> models = load_models(checkpoints, data.front().dim());
  std::filesystem::create_directories(out);
  std::vector<ModelRef> refs = make_refs(models, cfg, false);
  CurveCache cache;
  const SolverConfig solver = cfg.solver_config();
  write_csv(correlation_experiment(refs, data, solver, cfg.seed,
                                   cfg.experiment.permutation_shuffles, &cache),
            out / "correlation.csv");
  write_csv(timbre_invariance_experiment(refs, data, solver, cfg.seed, &cache),
            out / "timbre_invariance.csv");
  write_resolved_config(cfg, out);
  return 0;
}

int run_segment(const RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
                const std::filesystem::path& data_dir, const std::filesystem::path& out) {
  std::vector<LatentSequence> data = load_data_checked(data_dir, cfg.model.dim);
  std::vector<AnyModel> models = load_models(checkpoints, data.front().dim());
  std::filesystem::create_directories(out);
  std::vector<ModelRef> refs = make_refs(models, cfg, true);
  CurveCache cache;
  const SolverConfig solver = cfg.solver_config();
  ExperimentReport report = segment_experiment(refs, data, cfg.novelty_config(),
                                               cfg.experiment.boundary_window_seconds, solver,
                                               cfg.seed, &cache);
  write_csv(report, out / "segmentation.csv");

  // novelty plot of the first sequence per model at its last level
  for (const ModelRef& ref : refs) {
    const double t = ref.is_diffusion() ? ref.levels.back() : 0.0;
    const ICCurve& curve = cached_curve(&cache, ref, data.front(), t, solver, cfg.seed);
    Vec nov = novelty_values(curve.values, cfg.novelty_config());
    write_svg_lines(out / ("novelty_" + ref.id + ".svg"),
                    {{"ic", curve.values}, {"novelty", nov}},
                    ref.id + " IC and novelty, t=" + format_number(t));
  }
  write_resolved_config(cfg, out);
  return 0;
}

}  // namespace latentic
