#pragma once

#include "core/errors.hpp"

namespace topdown {

inline constexpr int kBaseScale = 4;
inline constexpr int kFullScale = 64;

// Progressive-growing state: output side length and fade-in weight of the
// newest block. alpha is always 1 at the base scale (nothing to blend from).
struct ScaleState {
  int scale = kBaseScale;
  double alpha = 1.0;
};

inline bool valid_scale(int scale) {
  if (scale < kBaseScale || scale > kFullScale) return false;
  while (scale > kBaseScale) {
    if (scale % 2 != 0) return false;
    scale /= 2;
  }
  return true;
}

inline void validate_scale_state(const ScaleState& st) {
  if (!valid_scale(st.scale)) throw ConfigError("invalid scale " + std::to_string(st.scale));
  if (st.alpha < 0.0 || st.alpha > 1.0)
    throw ConfigError("alpha out of [0,1]: " + std::to_string(st.alpha));
  if (st.scale == kBaseScale && st.alpha != 1.0)
    throw ConfigError("alpha must be 1 at the base scale");
}

// Stage index: 4 -> 0, 8 -> 1, ..., 64 -> 4.
inline int scale_stage(int scale) {
  int k = 0;
  while ((kBaseScale << k) < scale) ++k;
  return k;
}

// Channel widths per scale, mirrored between generator and discriminator.
inline int64_t scale_channels(int scale) {
  switch (scale) {
    case 4: return 256;
    case 8: return 256;
    case 16: return 128;
    case 32: return 64;
    case 64: return 32;
  }
  throw ConfigError("invalid scale " + std::to_string(scale));
}

}  // namespace topdown
