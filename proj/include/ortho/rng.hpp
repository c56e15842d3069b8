#pragma once

#include <cstdint>

namespace ortho::rng {

// SplitMix64: small deterministic generator whose output is identical across
// platforms.  Used wherever randomized checks must be replayable from a seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::uint64_t state_;
};

// Derives the seed of an independent substream.  Callers use one substream
// per unit of work (per replicate, per sampled pair, ...) so that results do
// not depend on evaluation order or on how work is split up.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ull * (stream + 0x632BE59BD9B4E019ull)));
  g.next();
  return g.next();
}

}  // namespace ortho::rng
