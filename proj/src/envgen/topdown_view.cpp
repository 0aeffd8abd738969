#include "envgen/topdown_view.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/errors.hpp"
#include "envgen/raycast.hpp"

namespace topdown {

Vec2 cell_center(int row, int col, double room_size, int grid_size) {
  double step = room_size / grid_size;
  return Vec2{(col + 0.5) * step, (row + 0.5) * step};
}

void cell_of(const Vec2& p, double room_size, int grid_size, int* row, int* col) {
  double step = room_size / grid_size;
  *col = std::clamp(static_cast<int>(p.x / step), 0, grid_size - 1);
  *row = std::clamp(static_cast<int>(p.z / step), 0, grid_size - 1);
}

Image8 render_topdown_full(const EnvironmentSpec& env, const GenConfig& config) {
  const int size = config.image_size;
  Image8 img(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      Rgb8 color = env.floor_color;
      if (r == 0 || c == 0 || r == size - 1 || c == size - 1) {
        color = env.wall_color;
      } else {
        Vec2 p = cell_center(r, c, env.room_size, size);
        for (const Box& box : env.objects) {
          if (box.contains(p)) {
            color = box.color;
            break;
          }
        }
      }
      img.set(r, c, color);
    }
  }
  int ar, ac;
  cell_of(env.agent_position, env.room_size, size, &ar, &ac);
  img.set(ar, ac, config.agent_color);
  return img;
}

Image8 render_topdown(const EnvironmentSpec& env, const BitGrid& visibility,
                      const GenConfig& config) {
  const int size = config.image_size;
  check_shape(visibility.height == size && visibility.width == size,
              "visibility grid shape mismatch");
  Image8 img = render_topdown_full(env, config);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      if (!visibility.get(r, c)) img.set(r, c, config.unknown_color);
  return img;
}

bool cell_visible(const EnvironmentSpec& env, const Pose& pose, double fov_rad, const Vec2& cell) {
  Vec2 d{cell.x - pose.position.x, cell.z - pose.position.z};
  double dist2 = d.x * d.x + d.z * d.z;
  if (dist2 < 1e-18) return true;  // the agent's own position

  double ang = std::atan2(d.z, d.x);
  double off = normalize_angle(ang - pose.yaw);
  if (off > std::numbers::pi) off -= 2.0 * std::numbers::pi;
  if (std::abs(off) > fov_rad / 2.0) return false;

  // Segment parameter where the cell is reached; clipped to the near face of
  // the cell's own box so object footprints become visible with their fronts.
  double t_cell = 1.0;
  for (const Box& box : env.objects) {
    if (box.contains(cell)) {
      double t;
      if (ray_box_entry(pose.position, d, box, &t)) t_cell = std::min(t_cell, t);
      break;  // boxes do not overlap
    }
  }
  for (const Box& box : env.objects) {
    if (box.contains(cell)) continue;
    double t;
    if (ray_box_entry(pose.position, d, box, &t) && t > 0.0 && t < t_cell) return false;
  }
  return true;
}

BitGrid pose_visibility(const EnvironmentSpec& env, const Pose& pose, const GenConfig& config) {
  const int size = config.image_size;
  const double fov = config.fov_deg * std::numbers::pi / 180.0;
  BitGrid grid(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      Vec2 p = cell_center(r, c, env.room_size, size);
      if (cell_visible(env, pose, fov, p)) grid.set(r, c, true);
    }
  }
  int ar, ac;
  cell_of(env.agent_position, env.room_size, size, &ar, &ac);
  grid.set(ar, ac, true);
  return grid;
}

}  // namespace topdown
