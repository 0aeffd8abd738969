#include "trainer/schedule.hpp"

#include <algorithm>

#include "core/errors.hpp"

namespace topdown {

namespace {

int stage_count(const ScaleSchedule& s) {
  int n = 1;
  int scale = s.start_scale;
  while (scale < s.final_scale) {
    scale *= 2;
    ++n;
  }
  return n;
}

}  // namespace

void ScaleSchedule::validate() const {
  if (!valid_scale(start_scale) || !valid_scale(final_scale) || final_scale < start_scale)
    throw ConfigError("bad schedule scales");
  if (iterations_per_scale < 1) throw ConfigError("iterations_per_scale must be >= 1");
  if (fade_iterations < 1 || fade_iterations > iterations_per_scale)
    throw ConfigError("fade_iterations must be in [1, iterations_per_scale]");
}

int64_t ScaleSchedule::total_iterations() const {
  return iterations_per_scale * stage_count(*this);
}

ScaleState schedule_state(int64_t iteration, const ScaleSchedule& schedule) {
  if (iteration < 0) throw ConfigError("negative iteration");
  int stages = stage_count(schedule);
  int stage = static_cast<int>(
      std::min<int64_t>(iteration / schedule.iterations_per_scale, stages - 1));
  ScaleState st;
  st.scale = schedule.start_scale << stage;
  if (stage == 0 || st.scale == schedule.final_scale) {
    st.alpha = 1.0;
  } else {
    int64_t offset = iteration - static_cast<int64_t>(stage) * schedule.iterations_per_scale;
    st.alpha = std::min(1.0, static_cast<double>(offset) /
                                 static_cast<double>(schedule.fade_iterations));
  }
  return st;
}

}  // namespace topdown
