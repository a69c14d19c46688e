#ifndef LATENTIC_SYNTHDATA_HPP
#define LATENTIC_SYNTHDATA_HPP

#include <filesystem>
#include <vector>

#include "latentic/rng.hpp"
#include "latentic/sequence.hpp"

namespace latentic {

// Synthetic stand-in for an audio-codec latent space. Symbols (the "pitch"
// analogue) occupy a coarse subspace via well-separated embedding vectors;
// timbre fills the remaining dimensions with low-amplitude autoregressive
// texture mixed by a per-timbre fixed orthogonal matrix, so it is structured
// but carries no information about the symbols.
struct GeneratorSpec {
  int n_symbols = 8;
  int frames_per_symbol = 4;
  int dim = 16;
  int coarse_dim = 4;
  double frame_rate = 10.0;
  double fine_amp = 0.05;
  double coarse_jitter = 0.02;
  int symbols_per_section = 12;
  uint64_t texture_seed = 0;
  std::vector<Vec> embedding;  // n_symbols x coarse_dim
  Mat transitions;             // n_symbols x n_symbols, rows sum to 1

  int fine_dim() const { return dim - coarse_dim; }
};

// Default spec: hypercube-corner embeddings and a Dirichlet-style random
// transition matrix with a small uniform floor.
GeneratorSpec make_generator_spec(Rng rng);

// Row-stochastic matrix with spread-out rows (for per-section statistics).
Mat random_transitions(int n, Rng& rng);

// One Markov symbol stream rendered under a timbre. The symbol path and the
// true per-symbol IC depend only on (spec, length, rng), never on timbre, so
// different timbre ids share note material.
LatentSequence gen_pitch_timbre(const GeneratorSpec& spec, int length_symbols, int timbre,
                                Rng rng);

// Concatenated sections, each with its own transition matrix and coarse
// palette; annotations carry the boundary times at section joins.
LatentSequence gen_segmented(const GeneratorSpec& spec, int n_sections, Rng rng);

// Directory of per-sequence pairs: raw little-endian float32 frames plus a
// JSON sidecar with frame rate, shape, and annotations. Bit-exact round trip.
void save_dataset(const std::vector<LatentSequence>& sequences,
                  const std::filesystem::path& dir);
std::vector<LatentSequence> load_dataset(const std::filesystem::path& dir);

}  // namespace latentic

#endif
