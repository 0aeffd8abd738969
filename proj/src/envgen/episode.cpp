#include "envgen/episode.hpp"

#include <numbers>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "envgen/raycast.hpp"
#include "envgen/topdown_view.hpp"

namespace topdown {

Episode simulate_episode(const EnvironmentSpec& env, int steps, const RotationPolicy& policy,
                         const GenConfig& config) {
  if (steps < 1) throw ConfigError("episode length must be >= 1");

  Rng rng = seed_stream(policy.seed, "envgen/episode");
  double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double fixed_inc =
      policy.increment_rad != 0.0 ? policy.increment_rad : 2.0 * std::numbers::pi / 20.0;
  double random_max =
      policy.random_max_rad != 0.0 ? policy.random_max_rad : 2.0 * std::numbers::pi / 10.0;

  Episode ep;
  ep.env = env;
  ep.frames.reserve(static_cast<size_t>(steps));
  ep.poses.reserve(static_cast<size_t>(steps));
  ep.visibility.reserve(static_cast<size_t>(steps));
  ep.targets.reserve(static_cast<size_t>(steps));

  BitGrid cumulative(config.image_size, config.image_size);
  for (int t = 0; t < steps; ++t) {
    Pose pose{env.agent_position, normalize_angle(yaw)};
    ep.poses.push_back(pose);
    ep.frames.push_back(render_first_person(env, pose, config));
    cumulative.or_with(pose_visibility(env, pose, config));
    ep.visibility.push_back(cumulative);
    ep.targets.push_back(render_topdown(env, cumulative, config));

    if (policy.kind == RotationPolicy::Kind::kFixedIncrement) {
      yaw += fixed_inc;
    } else {
      yaw += rng.uniform(0.0, random_max);
    }
  }
  return ep;
}

}  // namespace topdown
