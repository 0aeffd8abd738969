#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace topdown {

// PCG32 generator. Chosen over std engines because its state is two u64
// words that serialize portably, which the checkpoint format requires.
class Rng {
 public:
  Rng() : Rng(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}
  Rng(uint64_t state, uint64_t inc) : state_(state), inc_(inc | 1u) {}

  static Rng seeded(uint64_t seed, uint64_t sequence);

  uint32_t next_u32();
  uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double next_double();
  // Uniform in [0, 1) with 24 random bits.
  float next_float();

  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);
  // Standard normal via Box-Muller. Unbuffered: consumes two uniforms per
  // draw so the generator state never carries a cached second sample.
  double normal();
  float normal_f() { return static_cast<float>(normal()); }

  uint64_t state() const { return state_; }
  uint64_t inc() const { return inc_; }

 private:
  uint64_t state_;
  uint64_t inc_;
};

// FNV-1a hash of a tag string, used to derive independent stream keys.
uint64_t hash_tag(std::string_view tag);

// Derive a named stream from a root seed. Streams with different tags or
// indices are statistically independent and stable across runs.
Rng seed_stream(uint64_t root_seed, std::string_view tag, uint64_t index = 0);

std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& s);

}  // namespace topdown
