#include "core/image.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace topdown {

Tensor image_to_chw(const Image8& img) {
  Tensor t({3, img.height, img.width});
  image_to_chw_into(img, t.data());
  return t;
}

void image_to_chw_into(const Image8& img, float* dst) {
  const int64_t hw = static_cast<int64_t>(img.height) * img.width;
  const uint8_t* src = img.pixels.data();
  for (int64_t i = 0; i < hw; ++i) {
    dst[i] = static_cast<float>(src[3 * i]) * (1.0f / 255.0f);
    dst[hw + i] = static_cast<float>(src[3 * i + 1]) * (1.0f / 255.0f);
    dst[2 * hw + i] = static_cast<float>(src[3 * i + 2]) * (1.0f / 255.0f);
  }
}

Image8 chw_to_image(const Tensor& chw) {
  check_shape(chw.ndim() == 3 && chw.dim(0) == 3, "chw_to_image: expects (3,H,W)");
  int h = static_cast<int>(chw.dim(1));
  int w = static_cast<int>(chw.dim(2));
  Image8 img(h, w);
  const int64_t hw = static_cast<int64_t>(h) * w;
  const float* src = chw.data();
  for (int64_t i = 0; i < hw; ++i) {
    for (int c = 0; c < 3; ++c) {
      float v = std::clamp(src[c * hw + i], 0.0f, 1.0f);
      img.pixels[static_cast<size_t>(3 * i + c)] =
          static_cast<uint8_t>(std::lround(v * 255.0f));
    }
  }
  return img;
}

}  // namespace topdown
