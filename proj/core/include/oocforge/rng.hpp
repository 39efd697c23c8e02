#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oocforge {

// Deterministic random source. std::shuffle and the std:: distributions are
// implementation-defined, so every draw that must reproduce bit-for-bit
// (splits, batch order, undersampling, synthetic data) goes through this
// wrapper instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) via 128-bit multiply (Lemire reduction,
  // without rejection; the bias is < 2^-64 per draw).
  std::uint64_t below(std::uint64_t bound) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(engine_()) * bound;
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    // Box-Muller on deterministic uniforms.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates, fixed draw order.
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable combination of a base seed with a stream index (epoch number,
// task index), so per-epoch draws are decoupled but reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace oocforge
