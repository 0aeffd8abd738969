#include "envgen/environment.hpp"

#include <cmath>
#include <numbers>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace topdown {

double normalize_angle(double yaw) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double y = std::fmod(yaw, two_pi);
  if (y < 0.0) y += two_pi;
  if (y >= two_pi) y = 0.0;
  return y;
}

const std::vector<Rgb8>& object_palette() {
  static const std::vector<Rgb8> palette = {
      Rgb8{220, 30, 30},   // red
      Rgb8{40, 180, 60},   // green
      Rgb8{40, 90, 220},   // blue
      Rgb8{235, 220, 40},  // yellow
      Rgb8{200, 50, 200},  // magenta
      Rgb8{50, 200, 210},  // cyan
      Rgb8{240, 140, 30},  // orange
      Rgb8{130, 60, 200},  // purple
  };
  return palette;
}

namespace {

bool boxes_overlap(const Box& a, const Box& b, double gap) {
  return std::abs(a.center.x - b.center.x) < a.half_extent + b.half_extent + gap &&
         std::abs(a.center.z - b.center.z) < a.half_extent + b.half_extent + gap;
}

bool box_contains_with_margin(const Box& b, const Vec2& p, double margin) {
  return p.x > b.center.x - b.half_extent - margin && p.x < b.center.x + b.half_extent + margin &&
         p.z > b.center.z - b.half_extent - margin && p.z < b.center.z + b.half_extent + margin;
}

}  // namespace

EnvironmentSpec sample_environment(uint64_t seed, const GenConfig& config) {
  if (config.min_objects < 2 || config.max_objects > 5 || config.min_objects > config.max_objects)
    throw ConfigError("object count range must lie within [2,5]");
  if (config.min_half_extent > config.max_half_extent || config.min_half_extent <= 0.0)
    throw ConfigError("bad half_extent range");
  if (config.room_size <= 0.0) throw ConfigError("room_size must be positive");

  Rng rng = seed_stream(seed, "envgen/environment");

  EnvironmentSpec env;
  env.seed = seed;
  env.room_size = config.room_size;
  env.wall_height = config.wall_height;
  env.wall_color = config.wall_color;
  env.floor_color = config.floor_color;
  env.agent_height = config.agent_height;

  double m = config.agent_wall_margin;
  if (2.0 * m >= config.room_size) throw ConfigError("agent_wall_margin too large for room");
  env.agent_position.x = rng.uniform(m, config.room_size - m);
  env.agent_position.z = rng.uniform(m, config.room_size - m);

  int count = static_cast<int>(rng.uniform_int(config.min_objects, config.max_objects));
  const auto& palette = object_palette();
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < config.placement_attempts; ++attempt) {
      Box box;
      box.half_extent = rng.uniform(config.min_half_extent, config.max_half_extent);
      box.height = rng.uniform(config.min_obj_height, config.max_obj_height);
      box.color = palette[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(palette.size()) - 1))];
      double lo = config.wall_margin + box.half_extent;
      double hi = config.room_size - config.wall_margin - box.half_extent;
      if (lo >= hi) continue;  // box cannot fit strictly inside the room
      box.center.x = rng.uniform(lo, hi);
      box.center.z = rng.uniform(lo, hi);
      if (box_contains_with_margin(box, env.agent_position, config.agent_clearance)) continue;
      bool collides = false;
      for (const Box& other : env.objects) {
        if (boxes_overlap(box, other, config.object_gap)) {
          collides = true;
          break;
        }
      }
      if (collides) continue;
      env.objects.push_back(box);
      placed = true;
      break;
    }
    if (!placed)
      throw DataError("object placement failed after " +
                      std::to_string(config.placement_attempts) + " attempts");
  }
  return env;
}

}  // namespace topdown
