#include "envgen/raycast.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "core/errors.hpp"

namespace topdown {

namespace {

constexpr double kEps = 1e-12;

// Slab test along one axis; narrows [t0, t1] to the slab interval.
bool clip_slab(double origin, double dir, double lo, double hi, double* t0, double* t1) {
  if (std::abs(dir) < kEps) return origin > lo && origin < hi;
  double ta = (lo - origin) / dir;
  double tb = (hi - origin) / dir;
  if (ta > tb) std::swap(ta, tb);
  *t0 = std::max(*t0, ta);
  *t1 = std::min(*t1, tb);
  return *t0 <= *t1;
}

}  // namespace

bool ray_box_entry(const Vec2& origin, const Vec2& dir, const Box& box, double* t_entry) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  if (!clip_slab(origin.x, dir.x, box.center.x - box.half_extent, box.center.x + box.half_extent,
                 &t0, &t1))
    return false;
  if (!clip_slab(origin.z, dir.z, box.center.z - box.half_extent, box.center.z + box.half_extent,
                 &t0, &t1))
    return false;
  *t_entry = t0;
  return true;
}

double ray_room_exit(const Vec2& origin, const Vec2& dir, double room_size) {
  double t = std::numeric_limits<double>::infinity();
  if (std::abs(dir.x) > kEps) {
    double tx = dir.x > 0.0 ? (room_size - origin.x) / dir.x : (0.0 - origin.x) / dir.x;
    t = std::min(t, tx);
  }
  if (std::abs(dir.z) > kEps) {
    double tz = dir.z > 0.0 ? (room_size - origin.z) / dir.z : (0.0 - origin.z) / dir.z;
    t = std::min(t, tz);
  }
  return t;
}

void validate_pose(const EnvironmentSpec& env, const Pose& pose) {
  const Vec2& p = pose.position;
  if (p.x <= 0.0 || p.x >= env.room_size || p.z <= 0.0 || p.z >= env.room_size)
    throw DataError("invalid pose: outside room");
  for (const Box& box : env.objects)
    if (box.contains(p)) throw DataError("invalid pose: inside object");
}

Image8 render_first_person(const EnvironmentSpec& env, const Pose& pose, const GenConfig& config) {
  validate_pose(env, pose);
  const int size = config.image_size;
  Image8 img(size, size);

  const double fov = config.fov_deg * std::numbers::pi / 180.0;
  const double half_w = std::tan(fov / 2.0);
  // Pixel focal length; chosen so the horizontal FOV spans the image width.
  const double focal = (size / 2.0) / half_w;
  const double cy = size / 2.0;

  const Vec2 forward{std::cos(pose.yaw), std::sin(pose.yaw)};
  const Vec2 plane{-forward.z, forward.x};

  for (int col = 0; col < size; ++col) {
    double xn = 2.0 * (col + 0.5) / size - 1.0;  // [-1, 1] across the image
    Vec2 dir{forward.x + xn * half_w * plane.x, forward.z + xn * half_w * plane.z};

    double t_hit = ray_room_exit(pose.position, dir, env.room_size);
    Rgb8 surf_color = env.wall_color;
    double surf_height = env.wall_height;
    for (const Box& box : env.objects) {
      double t;
      if (ray_box_entry(pose.position, dir, box, &t) && t > kEps && t < t_hit) {
        t_hit = t;
        surf_color = box.color;
        surf_height = box.height;
      }
    }

    // Perpendicular distance (projection onto the view direction) removes
    // the fisheye effect.
    Vec2 hit{dir.x * t_hit, dir.z * t_hit};
    double d = hit.x * forward.x + hit.z * forward.z;
    d = std::max(d, 1e-6);

    double y_top = cy - focal * (surf_height - env.agent_height) / d;
    double y_bot = cy + focal * env.agent_height / d;
    int top = std::max(0, static_cast<int>(std::ceil(y_top - 0.5)));
    int bot = std::min(size - 1, static_cast<int>(std::floor(y_bot - 0.5)));

    for (int r = 0; r < size; ++r) {
      if (r < top)
        img.set(r, col, config.background_color);
      else if (r <= bot)
        img.set(r, col, surf_color);
      else
        img.set(r, col, env.floor_color);
    }
  }
  return img;
}

}  // namespace topdown
