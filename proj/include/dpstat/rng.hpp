#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dpstat {

// Deterministic uniform source.
//
// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
// converts raw 64-bit words to doubles directly, so draws are bit-identical
// across platforms and standard-library implementations.  All randomized code
// in this library consumes uniforms from here; everything downstream is an
// explicit inverse-CDF transform, so a (seed, call sequence) pair pins every
// result exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1): 53-bit mantissa, offset by half an
  // ulp so 0.0 and 1.0 are unreachable (log(0) never happens downstream).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // splitmix64 finalizer; stateless.
  static std::uint64_t split_mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  // Derives a stream seed from a root seed and an index path, e.g.
  // mix(root, {n_index, trial, purpose}).  Used to give every Monte Carlo
  // trial an independent, reproducible stream regardless of execution order
  // or thread count.
  static std::uint64_t mix(std::uint64_t root,
                           std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = split_mix(root);
    for (std::uint64_t p : path) s = split_mix(s ^ (p + 0x632BE59BD9B4E019ull));
    return s;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dpstat
