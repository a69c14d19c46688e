#include "latentic/sequence.hpp"

#include <stdexcept>

namespace latentic {

void validate_sequence(const LatentSequence& seq) {
  if (seq.length() < 2) throw std::invalid_argument("sequence: need at least 2 frames");
  const int d = seq.dim();
  for (const auto& f : seq.frames) {
    if (static_cast<int>(f.size()) != d)
      throw std::invalid_argument("sequence: ragged frame dimensions");
    if (!all_finite(f)) throw std::invalid_argument("sequence: non-finite frame");
  }
  if (seq.annotations) {
    const auto& a = *seq.annotations;
    double prev = 0.0;
    for (double b : a.boundary_times) {
      if (b <= prev || b >= seq.duration_seconds())
        throw std::invalid_argument("sequence: boundary times must be sorted and interior");
      prev = b;
    }
  }
}

}  // namespace latentic
