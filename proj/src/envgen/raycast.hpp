#pragma once

#include "envgen/environment.hpp"

namespace topdown {

// Column raycaster: one ray per image column across the horizontal FOV.
// Per column the nearest wall/object hit is projected with height
// proportional to 1 / perpendicular distance; floor below the hit band,
// background above it. Colors are taken unshaded from the spec so every
// pixel is exactly one of the configured colors.
Image8 render_first_person(const EnvironmentSpec& env, const Pose& pose, const GenConfig& config);

// First intersection of the ray (origin, dir) with the box footprint, as a
// ray parameter. Returns false when the ray misses. Used by the renderer and
// by visibility computation.
bool ray_box_entry(const Vec2& origin, const Vec2& dir, const Box& box, double* t_entry);

// Exit parameter of a ray starting inside the room.
double ray_room_exit(const Vec2& origin, const Vec2& dir, double room_size);

// Throws when the pose is outside the room or inside an object.
void validate_pose(const EnvironmentSpec& env, const Pose& pose);

}  // namespace topdown
