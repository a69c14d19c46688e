#ifndef LATENTIC_RNG_HPP
#define LATENTIC_RNG_HPP

#include <cstdint>
#include <cmath>

namespace latentic {

// Counter-based deterministic generator. A value type: (seed, stream) fully
// determines the sample sequence, and distinct streams are statistically
// independent for test purposes. Copies are cheap, so every Monte Carlo
// consumer can own its stream and evaluation order never matters.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream = 0)
      : seed_(seed), stream_(stream), state_(init_state(seed, stream)) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  uint64_t next_u64() {
    // SplitMix64 step; the stream offset keeps sequences disjoint in practice.
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // +1 or -1 with equal probability.
  double rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  // Integer uniform on [0, n).
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Combines two identifiers into a stream id, for keying per-(sequence, frame)
  // or per-(frame, run) substreams.
  static uint64_t key(uint64_t a, uint64_t b) {
    uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t init_state(uint64_t seed, uint64_t stream) {
    // Mix seed and stream into a well-separated starting state.
    uint64_t z = seed ^ (stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL);
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    return z ^ (z >> 33);
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace latentic

#endif
