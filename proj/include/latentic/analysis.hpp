#ifndef LATENTIC_ANALYSIS_HPP
#define LATENTIC_ANALYSIS_HPP

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "latentic/givt.hpp"
#include "latentic/process.hpp"
#include "latentic/report.hpp"
#include "latentic/surprisal.hpp"

namespace latentic {

struct BoundaryMatchResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::pair<double, double>> matches;  // (predicted, annotated)
};

struct NoveltyConfig {
  double sigma = 5.0;   // Gaussian smoothing std, in frames
  int window = 10;      // peak half-window, frames
  double kappa = 1.0;   // threshold factor over local mean + kappa * std
};

// Shared boolean mask over aligned time steps: a step is masked when its value
// falls in the lowest or highest fraction/2 of any model's series.
std::vector<bool> trim_extremes(const std::vector<Vec>& per_model_values, double fraction);

// Gaussian smoothing (kernel truncated at 4 sigma, renormalized, reflective
// boundary) followed by first differencing; output length = input - 1.
Vec novelty_values(const Vec& values, const NoveltyConfig& cfg);
Vec novelty_curve(const ICCurve& ic, const NoveltyConfig& cfg);

// Indices that are the strict maximum of their +-window neighborhood and
// clear the local mean + kappa * std threshold. Only full windows count, so
// curve edges never produce peaks.
std::vector<int> pick_peaks(const Vec& curve, const NoveltyConfig& cfg);

// Greedy one-to-one matching in order of increasing time distance, within
// +-window seconds. Empty prediction lists give precision 0.
BoundaryMatchResult boundary_prf(const Vec& predicted_times, const Vec& annotated_times,
                                 double window_seconds);

// Mean of the IC at each onset index and the following one (clamped at the
// end). Onsets are curve indices.
Vec onset_aligned_ic(const ICCurve& ic, const std::vector<int>& onsets);

// A model under comparison plus the noise levels to evaluate it at. GIVT has
// no noise continuum and contributes a single row.
struct ModelRef {
  std::string id;
  const ScoreModel* diffusion = nullptr;
  const GivtModel* givt = nullptr;
  std::vector<double> levels;

  bool is_diffusion() const { return diffusion != nullptr; }
};

ICCurve model_ic_curve(const ModelRef& model, const LatentSequence& seq, double t,
                       const SolverConfig& cfg, uint64_t seed);

// Keyed by (model id, level, sequence id); lets the correlation and timbre
// harnesses share solves.
using CurveCache = std::map<std::tuple<std::string, double, uint64_t>, ICCurve>;

const ICCurve& cached_curve(CurveCache* cache, const ModelRef& model,
                            const LatentSequence& seq, double t, const SolverConfig& cfg,
                            uint64_t seed);

// Spearman correlation between onset-aligned model IC and the generator's
// true symbol IC, pooled over sequences, with a permutation p-value.
// Rows: (model, t, rho, p_value, n_points).
ExperimentReport correlation_experiment(const std::vector<ModelRef>& models,
                                        const std::vector<LatentSequence>& dataset,
                                        const SolverConfig& cfg, uint64_t seed,
                                        int n_shuffles = 10000, CurveCache* cache = nullptr);

// Mean Spearman correlation of onset-aligned IC across all timbre pairs
// sharing note material. Rows: (model, t, mean_rho, n_pairs).
ExperimentReport timbre_invariance_experiment(const std::vector<ModelRef>& models,
                                              const std::vector<LatentSequence>& dataset,
                                              const SolverConfig& cfg, uint64_t seed,
                                              CurveCache* cache = nullptr);

// Likelihood approximation errors: normalized S-MAE per n_r against an
// n_r=32 reference at the base tolerance, and Q-MAE / Q-ME per tolerance
// against a tol=1e-5 reference with fixed probes.
// Rows: (metric, param, mae_normalized, me_normalized).
ExperimentReport error_experiment(const ScoreModel& model,
                                  const std::vector<LatentSequence>& dataset, int max_frames,
                                  const std::vector<int>& n_r_list,
                                  const std::vector<double>& tol_list, uint64_t seed);

// Held-out bits/dimension with joint extreme trimming.
// Rows: (model, bits_per_dim, n_frames_used).
ExperimentReport nll_experiment(const std::vector<ModelRef>& models,
                                const std::vector<LatentSequence>& dataset,
                                double trim_fraction, const SolverConfig& cfg, uint64_t seed,
                                CurveCache* cache = nullptr);

// Novelty-peak boundary detection, micro-averaged over sequences.
// Rows: (model, t, precision, recall, f1, n_predicted, n_annotated).
ExperimentReport segment_experiment(const std::vector<ModelRef>& models,
                                    const std::vector<LatentSequence>& dataset,
                                    const NoveltyConfig& novelty, double window_seconds,
                                    const SolverConfig& cfg, uint64_t seed,
                                    CurveCache* cache = nullptr);

// Predicted boundary time for a novelty peak index (the rise sits between
// curve indices i and i+1, i.e. between frames i+1 and i+2).
double peak_time_seconds(int novelty_index, double frame_rate);

// Mean micro-F1 of uniformly placed peaks (same counts as `peak_counts`),
// averaged over draws; the chance floor for the segmentation experiment.
double random_peak_baseline_f1(const std::vector<int>& peak_counts,
                               const std::vector<double>& durations,
                               const std::vector<Vec>& annotated, double window_seconds,
                               int draws, Rng& rng);

}  // namespace latentic

#endif
