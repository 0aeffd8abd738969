#include "core/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace topdown {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::seeded(uint64_t seed, uint64_t sequence) {
  Rng r(0, (sequence << 1u) | 1u);
  r.next_u32();
  r.state_ += splitmix64(seed);
  r.next_u32();
  return r;
}

uint32_t Rng::next_u32() {
  uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
  uint32_t rot = static_cast<uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

uint64_t Rng::next_u64() {
  uint64_t hi = next_u32();
  uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

float Rng::next_float() {
  return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
  // Rejection sampling keeps the draw unbiased.
  uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return lo + static_cast<int64_t>(v % span);
}

double Rng::normal() {
  double u1;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t hash_tag(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng seed_stream(uint64_t root_seed, std::string_view tag, uint64_t index) {
  uint64_t key = hash_tag(tag);
  uint64_t seed = splitmix64(root_seed ^ key) + splitmix64(index * 0x9e3779b97f4a7c15ULL + 1);
  return Rng::seeded(seed, key ^ index);
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng.state() << ":" << rng.inc();
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  auto pos = s.find(':');
  if (pos == std::string::npos) throw std::invalid_argument("bad rng state string: " + s);
  uint64_t state = std::stoull(s.substr(0, pos));
  uint64_t inc = std::stoull(s.substr(pos + 1));
  return Rng(state, inc);
}

}  // namespace topdown
