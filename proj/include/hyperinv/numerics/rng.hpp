#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hyperinv {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* bytes, std::size_t length,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a named sub-stream of a master seed. Streams with different
/// labels or indices are independent, so adding a consumer never perturbs
/// the draws seen by another one.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

/// Random source with distribution code that does not depend on the
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  Rng split(std::string_view label) { return Rng(derive_seed(next(), label)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hyperinv
