#pragma once

#include <cstdint>
#include <string_view>

namespace tempref::numcore {

/// Counter-based generator: output k is splitmix64(seed, k). Streams are
/// defined by this file alone, so identical seeds give identical values on
/// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in the open interval (0, 1).
  double uniform_open();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  bool bernoulli(double p);
  double normal();
  /// Standard Gumbel draw, -log(-log(u)) with u in (0, 1).
  double gumbel();

  /// Independent stream derived from this generator's seed and a label.
  /// Does not advance this generator.
  Rng fork(std::string_view label) const;
  Rng fork(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace tempref::numcore
