#pragma once

#include <vector>

#include "core/tensor.hpp"
#include "envgen/episode.hpp"

namespace topdown {

// Window length: the current observation plus the 20 before it.
inline constexpr int kWindow = 21;
inline constexpr int kStackedChannels = kWindow * 3;  // 63

// The padded observation window at one time step: exactly 21 frames, oldest
// first, current observation last. Frames before the episode start are blank
// (all zeros). valid_count is carried for tests only and never fed to the
// models.
struct ObservationSet {
  std::vector<Image8> frames;  // size kWindow
  int valid_count = 0;
};

Image8 blank_frame(int size);

// frames = [blank] * max(0, 20 - i) ++ episode.frames[max(0, i-20) .. i]
ObservationSet make_observation_set(const Episode& episode, int step);

// (63, H, W) float tensor; channel 3j+k is channel k of frame j.
Tensor stack_channels(const ObservationSet& set);
// Exact inverse of stack_channels.
std::vector<Image8> unstack_channels(const Tensor& stacked);

// (3, 21, H, W) volumetric float tensor for the 3D/2D+1D encoders; the
// channel invariant matches stack_channels frame for frame.
Tensor to_volume(const ObservationSet& set);

}  // namespace topdown
