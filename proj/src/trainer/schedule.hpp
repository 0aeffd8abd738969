#pragma once

#include <cstdint>

#include "gan/scale_state.hpp"

namespace topdown {

// Progressive-growing timetable. Scale doubles every iterations_per_scale
// starting from start_scale; within a post-growth stage alpha ramps linearly
// over fade_iterations. The first stage has no fade-in (nothing to blend
// from), and once the final scale is reached alpha is 1 and stays there.
struct ScaleSchedule {
  int start_scale = 4;
  int final_scale = 64;
  int64_t iterations_per_scale = 25000;
  int64_t fade_iterations = 12500;

  int64_t total_iterations() const;  // one full pass over every stage
  void validate() const;
};

ScaleState schedule_state(int64_t iteration, const ScaleSchedule& schedule);

}  // namespace topdown
