#pragma once

#include <cstdint>
#include <string_view>

namespace sigmoid {

// Deterministic random source used everywhere in the pipeline.
//
// The generator and the variate transforms are pinned so that a run is
// reproducible from its seeds alone, independent of the standard library:
//   - state stream: xoshiro256++ seeded through splitmix64
//   - uniform doubles: 53-bit mantissa, u = (x >> 11) * 2^-53 in [0, 1)
//   - normal variates: Box-Muller on two fresh uniforms, the second value
//     of each pair is cached and returned on the next call
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal.
  double normal();
  // Normal with the given standard deviation.
  double normal(double sigma) { return sigma * normal(); }

  // Derived, statistically independent child stream. Child seed is
  // splitmix64(seed ^ (0x9E3779B97F4A7C15 * (index + 1))); used for
  // per-replicate substreams so replicate k's draws never depend on how
  // many draws earlier replicates consumed.
  Rng fork(std::uint64_t index) const;

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 step; exposed because seed fan-out is part of the file formats'
// reproducibility contract.
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a over a byte string; used for stage-name hashing and content hashes.
std::uint64_t fnv1a64(std::string_view bytes);

// Stage seed = splitmix64(master_seed ^ fnv1a64(stage_name)). Every pipeline
// stage draws all of its randomness from its stage seed, so fixing the master
// seed fixes the whole run and changing it changes every stage.
std::uint64_t derive_stage_seed(std::uint64_t master_seed, std::string_view stage_name);

}  // namespace sigmoid
