#pragma once

#include <cstdint>
#include <vector>

#include "envgen/environment.hpp"

namespace topdown {

// Camera sweep policy. The agent stays in place and rotates about the
// vertical axis; only the yaw sequence differs between policies.
struct RotationPolicy {
  enum class Kind { kFixedIncrement, kRandomIncrement };
  Kind kind = Kind::kFixedIncrement;
  // Fixed policy: yaw advances by increment_rad each step (default 2*pi/20,
  // a full sweep every 20 steps).
  double increment_rad = 0.0;  // 0 selects the default
  // Random policy: per-step increment uniform in [0, random_max_rad).
  double random_max_rad = 0.0;  // 0 selects the default (2*pi/10)
  uint64_t seed = 0;            // stream for initial yaw and random increments
};

struct Episode {
  EnvironmentSpec env;
  std::vector<Image8> frames;       // first-person views
  std::vector<Pose> poses;
  std::vector<BitGrid> visibility;  // cumulative, monotone
  std::vector<Image8> targets;      // masked top-down views

  int length() const { return static_cast<int>(frames.size()); }
};

Episode simulate_episode(const EnvironmentSpec& env, int steps, const RotationPolicy& policy,
                         const GenConfig& config);

}  // namespace topdown
