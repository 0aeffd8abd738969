#pragma once

#include "envgen/environment.hpp"

namespace topdown {

// Orthographic map: floor, a one-cell wall ring, object footprints, and the
// agent marker. Nearest rasterization by cell center; no interpolation.
Image8 render_topdown_full(const EnvironmentSpec& env, const GenConfig& config);

// Full render with every non-visible cell overwritten by unknown_color. The
// agent marker only appears when its cell is visible.
Image8 render_topdown(const EnvironmentSpec& env, const BitGrid& visibility,
                      const GenConfig& config);

// World position of a grid cell center.
Vec2 cell_center(int row, int col, double room_size, int grid_size);
// Grid cell containing a world position.
void cell_of(const Vec2& p, double room_size, int grid_size, int* row, int* col);

// Visibility of one cell center from a pose: the cell must fall inside the
// horizontal FOV wedge and the segment from the agent must reach it without
// crossing another object. For a cell inside an object the segment is
// clipped at that object's near face (seeing the front of a box marks its
// footprint column as observed). The agent's own cell is always visible.
bool cell_visible(const EnvironmentSpec& env, const Pose& pose, double fov_rad, const Vec2& cell);

// Per-pose visibility over the whole grid.
BitGrid pose_visibility(const EnvironmentSpec& env, const Pose& pose, const GenConfig& config);

}  // namespace topdown
