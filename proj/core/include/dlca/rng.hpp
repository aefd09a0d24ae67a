#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dlca {

// splitmix64 finalizer; used to derive statistically independent child seeds
// from (master_seed, index) so work items can run on any number of workers
// without changing results.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Deterministic RNG: the mt19937_64 engine is fully specified by the standard;
// all transforms (uniform, Gaussian) are implemented here rather than via the
// implementation-defined <random> distributions, so streams are bit-stable
// across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free would bias for huge n; n here is tiny (2 or 4).
    return engine_() % n;
  }

  // Standard normal via Box-Muller on uniform draws.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Seeded source of Wiener increments dW ~ Normal(0, dt).
class WienerStream {
 public:
  explicit WienerStream(std::uint64_t seed) : rng_(seed) {}

  double next(double dt) { return rng_.gaussian() * std::sqrt(dt); }

 private:
  Rng rng_;
};

}  // namespace dlca
