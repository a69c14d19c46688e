#ifndef LATENTIC_SEQUENCE_HPP
#define LATENTIC_SEQUENCE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latentic/vecmath.hpp"

namespace latentic {

// Ground-truth markers attached by the synthetic generators.
struct Annotations {
  std::vector<int> frame_symbols;     // symbol id per frame
  std::vector<int> onset_frames;      // first frame of each symbol event
  std::vector<double> symbol_ic_bits; // true information content per symbol event
  std::vector<double> boundary_times; // planted section boundaries, seconds
  int timbre_id = -1;
  uint64_t material_id = 0;           // sequences sharing note material share this
};

// Time-ordered latent frames plus metadata.
struct LatentSequence {
  uint64_t id = 0;
  double frame_rate = 10.0;
  std::vector<Vec> frames;  // T x d
  std::optional<Annotations> annotations;

  int length() const { return static_cast<int>(frames.size()); }
  int dim() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size()); }
  double duration_seconds() const { return static_cast<double>(length()) / frame_rate; }
};

// Per-frame information content in bits/dimension at a stated noise level.
struct ICCurve {
  std::vector<double> values;  // index j holds the IC of frame j+1
  double noise_level = 0.0;
  double frame_rate = 10.0;
  std::string model_id;
};

void validate_sequence(const LatentSequence& seq);

}  // namespace latentic

#endif
