#pragma once

#include <cstdint>
#include <vector>

#include "core/image.hpp"

namespace topdown {

// World coordinates: the square room spans [0, room_size] on both x and z.
// Yaw is measured from +x toward +z, normalized to [0, 2*pi).
struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

struct Pose {
  Vec2 position;
  double yaw = 0.0;
};

double normalize_angle(double yaw);  // wraps into [0, 2*pi)

// Axis-aligned box footprint with a height, used both for rendering and for
// line-of-sight occlusion.
struct Box {
  Vec2 center;
  double half_extent = 0.0;
  double height = 0.0;
  Rgb8 color{0, 0, 0};

  bool contains(const Vec2& p) const {
    return p.x > center.x - half_extent && p.x < center.x + half_extent &&
           p.z > center.z - half_extent && p.z < center.z + half_extent;
  }
};

struct EnvironmentSpec {
  uint64_t seed = 0;
  double room_size = 0.0;
  double wall_height = 0.0;
  Rgb8 wall_color{0, 0, 0};
  Rgb8 floor_color{0, 0, 0};
  std::vector<Box> objects;
  Vec2 agent_position;
  double agent_height = 0.0;

  bool operator==(const EnvironmentSpec& other) const = default;
};

struct GenConfig {
  double room_size = 8.0;
  double wall_height = 2.0;
  double agent_height = 1.0;
  double fov_deg = 60.0;
  int image_size = 64;
  int min_objects = 2;
  int max_objects = 5;
  double min_half_extent = 0.4;
  double max_half_extent = 0.9;
  double min_obj_height = 0.6;
  double max_obj_height = 1.8;
  double wall_margin = 0.3;       // gap between objects and walls
  double object_gap = 0.15;       // gap between object footprints
  double agent_clearance = 0.35;  // objects keep this distance from the agent
  double agent_wall_margin = 1.2;
  int placement_attempts = 1000;

  Rgb8 wall_color{200, 200, 200};
  Rgb8 floor_color{56, 56, 56};
  Rgb8 background_color{16, 16, 24};
  Rgb8 unknown_color{128, 128, 128};
  Rgb8 agent_color{255, 255, 255};
};

// Fixed object palette, distinct from wall/floor/unknown/agent colors.
const std::vector<Rgb8>& object_palette();

// Deterministic in (seed, config). Throws DataError when objects cannot be
// placed after config.placement_attempts tries.
EnvironmentSpec sample_environment(uint64_t seed, const GenConfig& config);

}  // namespace topdown
