#pragma once

#include <cstdint>
#include <random>

namespace scum {

/// SplitMix64 finalizer; used to derive independent per-sample seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Seeded generator with portable transforms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so every transform used by
/// the library lives here and produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform on the open interval (0, 1).
  double uniform_open();

  /// Uniform integer in [lo, hi], inclusive; unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  double normal();

  /// Gamma(shape, 1). Returns log of the draw so small shapes do not
  /// underflow.
  double log_gamma_draw(double shape);

  /// Independent generator for sample `index` of a batch seeded by this one.
  Rng derive(std::uint64_t index) const { return Rng(mix_seed(seed_, index)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace scum
