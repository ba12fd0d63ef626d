#pragma once

#include <cstdint>
#include <random>

namespace icac {

// Deterministic combine of seed words (splitmix64 finalizer).
uint64_t mix_seed(uint64_t a, uint64_t b);
uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c);

// Seeded random source. uniform()/normal() are virtual so tests can stub
// individual draws (e.g. the imagination gate) without touching callers.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0x9e3779b97f4a7c15ull) : eng_(seed) {}
  virtual ~Rng() = default;

  // [0, 1)
  virtual double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // N(0, 1), Box-Muller without cached state.
  virtual double normal();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int integer(int n);

  uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace icac
