#ifndef LATENTIC_SURPRISAL_HPP
#define LATENTIC_SURPRISAL_HPP

#include <filesystem>

#include "latentic/process.hpp"

namespace latentic {

// -loglik / (d ln 2): nats to bits per dimension.
double bits_per_dim(double loglik_nats, int d);

// IC of frame k at noise level t, in bits/dimension. The context comes from
// the clean frames before k; only the evaluated point is noised (via the
// expected value of the noise process). Frame 0 has no context and is
// rejected. Hutchinson probes are keyed by (sequence id, k) so frames are
// independent but reproducible.
double frame_ic(const ScoreModel& m, const LatentSequence& seq, int k, double t,
                const SolverConfig& cfg, uint64_t seed);

// frame_ic for k = 1..T-1 with a single encoder pass.
ICCurve ic_curve(const ScoreModel& m, const LatentSequence& seq, double t,
                 const SolverConfig& cfg, uint64_t seed);

// Mean of unmasked values over the concatenated curves. The mask comes from
// analysis::trim_extremes computed jointly across models.
double mean_nll(const std::vector<ICCurve>& curves, const std::vector<bool>& trim_mask);

// CSV columns (frame, time_seconds, ic_bits_per_dim) plus a JSON sidecar
// (model id, t, solver config, seed) at <path>.json.
void write_ic_csv(const ICCurve& curve, const std::filesystem::path& path,
                  const SolverConfig& cfg, uint64_t seed);

}  // namespace latentic

#endif
