#include "obsmodel/observation.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace topdown {

Image8 blank_frame(int size) { return Image8(size, size); }

ObservationSet make_observation_set(const Episode& episode, int step) {
  const int T = episode.length();
  if (step < 0 || step >= T) throw DataError("observation step out of range");
  const int size = episode.frames[0].height;
  ObservationSet set;
  set.frames.reserve(kWindow);
  int blanks = std::max(0, kWindow - 1 - step);
  for (int i = 0; i < blanks; ++i) set.frames.push_back(blank_frame(size));
  for (int i = std::max(0, step - (kWindow - 1)); i <= step; ++i)
    set.frames.push_back(episode.frames[static_cast<size_t>(i)]);
  set.valid_count = std::min(step + 1, kWindow);
  check_shape(static_cast<int>(set.frames.size()) == kWindow, "observation window size");
  return set;
}

Tensor stack_channels(const ObservationSet& set) {
  check_shape(static_cast<int>(set.frames.size()) == kWindow, "stack_channels: bad window");
  const int h = set.frames[0].height;
  const int w = set.frames[0].width;
  Tensor out({kStackedChannels, h, w});
  const int64_t hw = static_cast<int64_t>(h) * w;
  float* dst = out.data();
  for (int j = 0; j < kWindow; ++j) {
    const Image8& f = set.frames[static_cast<size_t>(j)];
    check_shape(f.height == h && f.width == w, "stack_channels: frame size mismatch");
    image_to_chw_into(f, dst + static_cast<int64_t>(3) * j * hw);
  }
  return out;
}

std::vector<Image8> unstack_channels(const Tensor& stacked) {
  check_shape(stacked.ndim() == 3 && stacked.dim(0) == kStackedChannels,
              "unstack_channels: expects (63,H,W)");
  const int h = static_cast<int>(stacked.dim(1));
  const int w = static_cast<int>(stacked.dim(2));
  const int64_t hw = static_cast<int64_t>(h) * w;
  std::vector<Image8> frames;
  for (int j = 0; j < kWindow; ++j) {
    Image8 img(h, w);
    const float* src = stacked.data() + static_cast<int64_t>(3) * j * hw;
    for (int64_t i = 0; i < hw; ++i) {
      for (int c = 0; c < 3; ++c) {
        float v = src[c * hw + i];
        img.pixels[static_cast<size_t>(3 * i + c)] =
            static_cast<uint8_t>(std::lround(std::fmin(std::fmax(v, 0.0f), 1.0f) * 255.0f));
      }
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

Tensor to_volume(const ObservationSet& set) {
  check_shape(static_cast<int>(set.frames.size()) == kWindow, "to_volume: bad window");
  const int h = set.frames[0].height;
  const int w = set.frames[0].width;
  const int64_t hw = static_cast<int64_t>(h) * w;
  Tensor out({3, kWindow, h, w});
  float* dst = out.data();
  for (int j = 0; j < kWindow; ++j) {
    const Image8& f = set.frames[static_cast<size_t>(j)];
    const uint8_t* src = f.pixels.data();
    for (int64_t i = 0; i < hw; ++i) {
      for (int c = 0; c < 3; ++c) {
        dst[(static_cast<int64_t>(c) * kWindow + j) * hw + i] =
            static_cast<float>(src[3 * i + c]) * (1.0f / 255.0f);
      }
    }
  }
  return out;
}

}  // namespace topdown
