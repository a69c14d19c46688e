#include "latentic/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latentic/stats.hpp"

namespace latentic {

std::vector<bool> trim_extremes(const std::vector<Vec>& per_model_values, double fraction) {
  if (per_model_values.empty()) throw std::invalid_argument("trim_extremes: no models");
  if (fraction < 0.0 || fraction >= 0.5)
    throw std::invalid_argument("trim_extremes: fraction must be in [0, 0.5)");
  const size_t T = per_model_values.front().size();
  for (const auto& v : per_model_values)
    if (v.size() != T) throw std::invalid_argument("trim_extremes: misaligned inputs");

  std::vector<bool> mask(T, false);
  const int k_total = static_cast<int>(std::ceil(fraction * static_cast<double>(T)));
  if (k_total == 0) return mask;
  const int k_high = k_total / 2;
  const int k_low = k_total - k_high;

  for (const auto& values : per_model_values) {
    std::vector<size_t> order(T);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });
    for (int i = 0; i < k_low; ++i) mask[order[static_cast<size_t>(i)]] = true;
    for (int i = 0; i < k_high; ++i) mask[order[T - 1 - static_cast<size_t>(i)]] = true;
  }
  return mask;
}

Vec novelty_values(const Vec& values, const NoveltyConfig& cfg) {
  const int T = static_cast<int>(values.size());
  if (T < 3) throw std::invalid_argument("novelty: need at least 3 values");
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("novelty: sigma must be > 0");

  const int radius = static_cast<int>(std::ceil(4.0 * cfg.sigma));
  Vec kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int j = -radius; j <= radius; ++j) {
    kernel[static_cast<size_t>(j + radius)] =
        std::exp(-0.5 * static_cast<double>(j) * j / (cfg.sigma * cfg.sigma));
    sum += kernel[static_cast<size_t>(j + radius)];
  }
  for (auto& k : kernel) k /= sum;

  auto reflect = [T](int i) {
    while (i < 0 || i >= T) {
      if (i < 0) i = -i - 1;
      if (i >= T) i = 2 * T - 1 - i;
    }
    return i;
  };

  Vec smooth(static_cast<size_t>(T), 0.0);
  for (int i = 0; i < T; ++i) {
    double acc = 0.0;
    for (int j = -radius; j <= radius; ++j)
      acc += kernel[static_cast<size_t>(j + radius)] * values[static_cast<size_t>(reflect(i + j))];
    smooth[static_cast<size_t>(i)] = acc;
  }
  Vec out(static_cast<size_t>(T - 1));
  for (int i = 0; i + 1 < T; ++i)
    out[static_cast<size_t>(i)] = smooth[static_cast<size_t>(i + 1)] - smooth[static_cast<size_t>(i)];
  return out;
}

Vec novelty_curve(const ICCurve& ic, const NoveltyConfig& cfg) {
  return novelty_values(ic.values, cfg);
}

std::vector<int> pick_peaks(const Vec& curve, const NoveltyConfig& cfg) {
  if (curve.empty()) throw std::invalid_argument("pick_peaks: empty curve");
  if (cfg.window < 1) throw std::invalid_argument("pick_peaks: window must be >= 1");
  const int n = static_cast<int>(curve.size());
  const int w = cfg.window;
  std::vector<int> peaks;
  for (int i = w; i + w < n; ++i) {
    const double v = curve[static_cast<size_t>(i)];
    bool strict_max = true;
    double mean = 0.0;
    for (int j = i - w; j <= i + w; ++j) {
      if (j != i && curve[static_cast<size_t>(j)] >= v) {
        strict_max = false;
        break;
      }
      mean += curve[static_cast<size_t>(j)];
    }
    if (!strict_max) continue;
    const int L = 2 * w + 1;
    mean /= static_cast<double>(L);
    double var = 0.0;
    for (int j = i - w; j <= i + w; ++j) {
      const double d = curve[static_cast<size_t>(j)] - mean;
      var += d * d;
    }
    var /= static_cast<double>(L);
    if (v >= mean + cfg.kappa * std::sqrt(var)) peaks.push_back(i);
  }
  return peaks;
}

BoundaryMatchResult boundary_prf(const Vec& predicted_times, const Vec& annotated_times,
                                 double window_seconds) {
  if (!(window_seconds > 0.0)) throw std::invalid_argument("boundary_prf: window must be > 0");
  if (!std::is_sorted(predicted_times.begin(), predicted_times.end()) ||
      !std::is_sorted(annotated_times.begin(), annotated_times.end()))
    throw std::invalid_argument("boundary_prf: inputs must be sorted");

  struct Cand {
    double dist;
    size_t p, a;
  };
  std::vector<Cand> cands;
  for (size_t p = 0; p < predicted_times.size(); ++p)
    for (size_t a = 0; a < annotated_times.size(); ++a) {
      const double d = std::abs(predicted_times[p] - annotated_times[a]);
      if (d <= window_seconds) cands.push_back({d, p, a});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.dist != y.dist) return x.dist < y.dist;
    if (x.p != y.p) return x.p < y.p;
    return x.a < y.a;
  });

  std::vector<bool> p_used(predicted_times.size(), false);
  std::vector<bool> a_used(annotated_times.size(), false);
  BoundaryMatchResult res;
  for (const Cand& c : cands) {
    if (p_used[c.p] || a_used[c.a]) continue;
    p_used[c.p] = true;
    a_used[c.a] = true;
    res.matches.emplace_back(predicted_times[c.p], annotated_times[c.a]);
  }
  const double m = static_cast<double>(res.matches.size());
  res.precision = predicted_times.empty() ? 0.0 : m / static_cast<double>(predicted_times.size());
  res.recall = annotated_times.empty() ? 0.0 : m / static_cast<double>(annotated_times.size());
  res.f1 = (res.precision + res.recall > 0.0)
               ? 2.0 * res.precision * res.recall / (res.precision + res.recall)
               : 0.0;
  return res;
}

Vec onset_aligned_ic(const ICCurve& ic, const std::vector<int>& onsets) {
  const int n = static_cast<int>(ic.values.size());
  Vec out;
  out.reserve(onsets.size());
  for (int k : onsets) {
    if (k < 0 || k >= n) throw std::invalid_argument("onset_aligned_ic: onset out of range");
    if (k + 1 < n)
      out.push_back(0.5 * (ic.values[static_cast<size_t>(k)] + ic.values[static_cast<size_t>(k + 1)]));
    else
      out.push_back(ic.values[static_cast<size_t>(k)]);
  }
  return out;
}

ICCurve model_ic_curve(const ModelRef& model, const LatentSequence& seq, double t,
                       const SolverConfig& cfg, uint64_t seed) {
  if (model.is_diffusion()) return ic_curve(*model.diffusion, seq, t, cfg, seed);
  ICCurve c = givt_ic_curve(*model.givt, seq);
  c.model_id = model.id;
  return c;
}

const ICCurve& cached_curve(CurveCache* cache, const ModelRef& model,
                            const LatentSequence& seq, double t, const SolverConfig& cfg,
                            uint64_t seed) {
  static thread_local ICCurve scratch;
  if (!cache) {
    scratch = model_ic_curve(model, seq, t, cfg, seed);
    return scratch;
  }
  const auto key = std::make_tuple(model.id, t, seq.id);
  auto it = cache->find(key);
  if (it == cache->end())
    it = cache->emplace(key, model_ic_curve(model, seq, t, cfg, seed)).first;
  return it->second;
}

namespace {

std::string level_label(const ModelRef& model, double t) {
  return model.is_diffusion() ? format_number(t) : "-";
}

std::vector<double> model_levels(const ModelRef& model) {
  if (model.is_diffusion()) {
    if (model.levels.empty()) throw std::invalid_argument("model ref: no noise levels");
    return model.levels;
  }
  return {0.0};
}

// Onset-aligned ICs of one sequence paired with the true symbol ICs; the
// first symbol event has no context and is skipped.
void aligned_pairs(const ICCurve& curve, const LatentSequence& seq, Vec& model_ic,
                   Vec& true_ic) {
  const Annotations& ann = *seq.annotations;
  std::vector<int> curve_onsets;
  std::vector<double> truth;
  for (size_t e = 0; e < ann.onset_frames.size(); ++e) {
    const int frame = ann.onset_frames[e];
    if (frame < 1) continue;  // frame 0 has no prediction
    curve_onsets.push_back(frame - 1);
    truth.push_back(ann.symbol_ic_bits[e]);
  }
  Vec aligned = onset_aligned_ic(curve, curve_onsets);
  model_ic.insert(model_ic.end(), aligned.begin(), aligned.end());
  true_ic.insert(true_ic.end(), truth.begin(), truth.end());
}

}  // namespace

ExperimentReport correlation_experiment(const std::vector<ModelRef>& models,
                                        const std::vector<LatentSequence>& dataset,
                                        const SolverConfig& cfg, uint64_t seed,
                                        int n_shuffles, CurveCache* cache) {
  for (const auto& seq : dataset)
    if (!seq.annotations || seq.annotations->onset_frames.empty())
      throw std::invalid_argument("correlation_experiment: dataset lacks symbol annotations");

  ExperimentReport report;
  report.name = "correlation";
  report.columns = {"model", "t", "rho", "p_value", "n_points"};
  for (size_t mi = 0; mi < models.size(); ++mi) {
    const ModelRef& model = models[mi];
    const auto levels = model_levels(model);
    for (size_t li = 0; li < levels.size(); ++li) {
      Vec model_ic, true_ic;
      for (const auto& seq : dataset) {
        const ICCurve& curve = cached_curve(cache, model, seq, levels[li], cfg, seed);
        aligned_pairs(curve, seq, model_ic, true_ic);
      }
      const double rho = spearman_rho(model_ic, true_ic);
      Rng prng(seed, Rng::key(0xC0F0 + mi, li));
      const double p = spearman_permutation_pvalue(model_ic, true_ic, n_shuffles, prng);
      report.add_row({model.id, level_label(model, levels[li]), format_number(rho),
                      format_number(p), std::to_string(model_ic.size())});
    }
  }
  return report;
}

ExperimentReport timbre_invariance_experiment(const std::vector<ModelRef>& models,
                                              const std::vector<LatentSequence>& dataset,
                                              const SolverConfig& cfg, uint64_t seed,
                                              CurveCache* cache) {
  // group by note material
  std::map<uint64_t, std::vector<const LatentSequence*>> groups;
  for (const auto& seq : dataset) {
    if (!seq.annotations) throw std::invalid_argument("timbre_invariance: missing annotations");
    groups[seq.annotations->material_id].push_back(&seq);
  }

  ExperimentReport report;
  report.name = "timbre_invariance";
  report.columns = {"model", "t", "mean_rho", "n_pairs"};
  for (const ModelRef& model : models) {
    const auto levels = model_levels(model);
    for (double t : levels) {
      double rho_sum = 0.0;
      int n_pairs = 0;
      for (const auto& [material, seqs] : groups) {
        for (size_t a = 0; a < seqs.size(); ++a)
          for (size_t b = a + 1; b < seqs.size(); ++b) {
            const Annotations& aa = *seqs[a]->annotations;
            const Annotations& ab = *seqs[b]->annotations;
            if (aa.timbre_id == ab.timbre_id) continue;
            if (aa.onset_frames != ab.onset_frames || aa.frame_symbols != ab.frame_symbols)
              throw std::invalid_argument(
                  "timbre_invariance: paired sequences disagree on symbol annotations");
            Vec ic_a, ic_b, truth;
            aligned_pairs(cached_curve(cache, model, *seqs[a], t, cfg, seed), *seqs[a], ic_a, truth);
            truth.clear();
            aligned_pairs(cached_curve(cache, model, *seqs[b], t, cfg, seed), *seqs[b], ic_b, truth);
            rho_sum += spearman_rho(ic_a, ic_b);
            ++n_pairs;
          }
      }
      if (n_pairs == 0) throw std::invalid_argument("timbre_invariance: no timbre pairs");
      report.add_row({model.id, level_label(model, t), format_number(rho_sum / n_pairs),
                      std::to_string(n_pairs)});
    }
  }
  return report;
}

ExperimentReport error_experiment(const ScoreModel& model,
                                  const std::vector<LatentSequence>& dataset, int max_frames,
                                  const std::vector<int>& n_r_list,
                                  const std::vector<double>& tol_list, uint64_t seed) {
  // flatten (sequence, frame) slots with their contexts
  struct Slot {
    const LatentSequence* seq;
    int k;
    Vec ctx;
  };
  std::vector<Slot> slots;
  for (const auto& seq : dataset) {
    if (static_cast<int>(slots.size()) >= max_frames) break;
    std::vector<Vec> ctx = encoder_apply(model.encoder, seq.frames);
    for (int k = 1; k < seq.length() && static_cast<int>(slots.size()) < max_frames; ++k)
      slots.push_back({&seq, k, ctx[static_cast<size_t>(k - 1)]});
  }
  if (slots.size() < 100)
    throw std::invalid_argument("error_experiment: need at least 100 frames");

  const int d = model.head.out_dim;
  const double t0 = model.process.t_start;
  constexpr int kRefRuns = 32;
  constexpr double kRefTol = 1e-5;

  auto estimate = [&](const Slot& slot, const SolverConfig& cfg, uint64_t stream) {
    Rng rng(seed, stream);
    const double ll = model_loglik(model, slot.seq->frames[static_cast<size_t>(slot.k)], t0,
                                   slot.ctx, cfg, rng);
    return bits_per_dim(ll, d);
  };

  ExperimentReport report;
  report.name = "errors";
  report.columns = {"metric", "param", "mae_normalized", "me_normalized"};

  // Skilling-Hutchinson error: independent probes per (frame, n_r), reference
  // at n_r = 32 with the same keying so the listed n_r = 32 is its own
  // reference.
  {
    SolverConfig cfg;  // base tolerance
    cfg.mode = DivergenceMode::Hutchinson;
    Vec reference(slots.size());
    cfg.n_r = kRefRuns;
    for (size_t i = 0; i < slots.size(); ++i)
      reference[i] = estimate(slots[i], cfg, Rng::key(i, static_cast<uint64_t>(kRefRuns)));
    for (int n_r : n_r_list) {
      cfg.n_r = n_r;
      Vec est(slots.size());
      for (size_t i = 0; i < slots.size(); ++i)
        est[i] = estimate(slots[i], cfg, Rng::key(i, static_cast<uint64_t>(n_r)));
      const ErrorStats s = error_stats(est, reference);
      report.add_row({"s_mae", std::to_string(n_r), format_number(s.mae_normalized), ""});
    }
  }

  // Quantization error: probes fixed per frame so the Monte Carlo noise is
  // common across tolerances and only the solver error varies.
  {
    SolverConfig cfg;
    cfg.mode = DivergenceMode::Hutchinson;
    auto q_stream = [](size_t i) { return Rng::key(i, 0x51u); };
    Vec reference(slots.size());
    cfg.atol = cfg.rtol = kRefTol;
    for (size_t i = 0; i < slots.size(); ++i)
      reference[i] = estimate(slots[i], cfg, q_stream(i));
    for (double tol : tol_list) {
      cfg.atol = cfg.rtol = tol;
      Vec est(slots.size());
      for (size_t i = 0; i < slots.size(); ++i) est[i] = estimate(slots[i], cfg, q_stream(i));
      const ErrorStats s = error_stats(est, reference);
      report.add_row({"q", format_number(tol), format_number(s.mae_normalized),
                      format_number(s.me_normalized)});
    }
  }
  return report;
}

ExperimentReport nll_experiment(const std::vector<ModelRef>& models,
                                const std::vector<LatentSequence>& dataset,
                                double trim_fraction, const SolverConfig& cfg, uint64_t seed,
                                CurveCache* cache) {
  if (dataset.empty()) throw std::invalid_argument("nll_experiment: empty dataset");
  std::vector<std::vector<ICCurve>> curves(models.size());
  std::vector<Vec> concatenated(models.size());
  for (size_t mi = 0; mi < models.size(); ++mi) {
    const ModelRef& model = models[mi];
    const double t0 = model.is_diffusion() ? model.diffusion->process.t_start : 0.0;
    for (const auto& seq : dataset) {
      ICCurve c = cached_curve(cache, model, seq, t0, cfg, seed);
      concatenated[mi].insert(concatenated[mi].end(), c.values.begin(), c.values.end());
      curves[mi].push_back(std::move(c));
    }
  }
  const std::vector<bool> mask = trim_extremes(concatenated, trim_fraction);
  size_t kept = 0;
  for (bool b : mask)
    if (!b) ++kept;

  ExperimentReport report;
  report.name = "nll";
  report.columns = {"model", "bits_per_dim", "n_frames_used"};
  for (size_t mi = 0; mi < models.size(); ++mi)
    report.add_row({models[mi].id, format_number(mean_nll(curves[mi], mask)),
                    std::to_string(kept)});
  return report;
}

double peak_time_seconds(int novelty_index, double frame_rate) {
  return static_cast<double>(novelty_index + 2) / frame_rate;
}

ExperimentReport segment_experiment(const std::vector<ModelRef>& models,
                                    const std::vector<LatentSequence>& dataset,
                                    const NoveltyConfig& novelty, double window_seconds,
                                    const SolverConfig& cfg, uint64_t seed,
                                    CurveCache* cache) {
  for (const auto& seq : dataset)
    if (!seq.annotations || seq.annotations->boundary_times.empty())
      throw std::invalid_argument("segment_experiment: dataset lacks boundary annotations");

  ExperimentReport report;
  report.name = "segmentation";
  report.columns = {"model", "t", "precision", "recall", "f1", "n_predicted", "n_annotated"};
  for (const ModelRef& model : models) {
    for (double t : model_levels(model)) {
      size_t matches = 0, n_pred = 0, n_ann = 0;
      for (const auto& seq : dataset) {
        const ICCurve& curve = cached_curve(cache, model, seq, t, cfg, seed);
        const Vec nov = novelty_values(curve.values, novelty);
        Vec predicted;
        for (int idx : pick_peaks(nov, novelty))
          predicted.push_back(peak_time_seconds(idx, seq.frame_rate));
        Vec annotated(seq.annotations->boundary_times.begin(),
                      seq.annotations->boundary_times.end());
        BoundaryMatchResult r = boundary_prf(predicted, annotated, window_seconds);
        matches += r.matches.size();
        n_pred += predicted.size();
        n_ann += annotated.size();
      }
      const double precision = n_pred ? static_cast<double>(matches) / n_pred : 0.0;
      const double recall = n_ann ? static_cast<double>(matches) / n_ann : 0.0;
      const double f1 = (precision + recall > 0.0)
                            ? 2.0 * precision * recall / (precision + recall)
                            : 0.0;
      report.add_row({model.id, level_label(model, t), format_number(precision),
                      format_number(recall), format_number(f1), std::to_string(n_pred),
                      std::to_string(n_ann)});
    }
  }
  return report;
}

double random_peak_baseline_f1(const std::vector<int>& peak_counts,
                               const std::vector<double>& durations,
                               const std::vector<Vec>& annotated, double window_seconds,
                               int draws, Rng& rng) {
  if (peak_counts.size() != durations.size() || peak_counts.size() != annotated.size())
    throw std::invalid_argument("random_peak_baseline_f1: mismatched inputs");
  double f1_sum = 0.0;
  for (int d = 0; d < draws; ++d) {
    size_t matches = 0, n_pred = 0, n_ann = 0;
    for (size_t s = 0; s < peak_counts.size(); ++s) {
      Vec pred;
      for (int i = 0; i < peak_counts[s]; ++i)
        pred.push_back(rng.uniform_range(0.0, durations[s]));
      std::sort(pred.begin(), pred.end());
      BoundaryMatchResult r = boundary_prf(pred, annotated[s], window_seconds);
      matches += r.matches.size();
      n_pred += pred.size();
      n_ann += annotated[s].size();
    }
    const double precision = n_pred ? static_cast<double>(matches) / n_pred : 0.0;
    const double recall = n_ann ? static_cast<double>(matches) / n_ann : 0.0;
    f1_sum += (precision + recall > 0.0)
                  ? 2.0 * precision * recall / (precision + recall)
                  : 0.0;
  }
  return f1_sum / static_cast<double>(draws);
}

}  // namespace latentic
