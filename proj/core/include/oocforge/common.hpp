#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace oocforge {

inline constexpr const char* kVersion = "0.1.0";

using ImageId = std::int64_t;
using CategoryId = std::int64_t;

// Error taxonomy shared by all modules. The CLI maps ParseError /
// IntegrityError / ConfigError to exit code 2 and ComputeError to exit 3.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};
struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ComputeError : std::runtime_error {
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Probability clamp applied everywhere a log is taken.
inline constexpr double kProbEpsilon = 1e-12;

inline double clamp_prob(double q) {
  if (q < kProbEpsilon) return kProbEpsilon;
  if (q > 1.0 - kProbEpsilon) return 1.0 - kProbEpsilon;
  return q;
}

// Example-wise cross-entropy -[y log q + (1-y) log(1-q)], evaluated as
// -log of the probability assigned to the observed label so that losses
// built on top of it (focal, reweighting) share the exact same arithmetic.
inline double xent(double q, int y) {
  const double q_label = (y == 1) ? q : 1.0 - q;
  return -std::log(clamp_prob(q_label));
}

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// FNV-1a 64-bit, used for input digests in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace oocforge
