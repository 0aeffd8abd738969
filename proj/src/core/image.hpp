#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace topdown {

// 8-bit interleaved RGB image. All rendered data is quantized to this type
// at the source so the PNG round trip is exact by construction; float
// tensors fed to the models are value/255.
struct Image8 {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // height*width*3, row-major, RGB

  Image8() = default;
  Image8(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, 0) {}

  uint8_t* px(int r, int c) { return pixels.data() + (static_cast<size_t>(r) * width + c) * 3; }
  const uint8_t* px(int r, int c) const {
    return pixels.data() + (static_cast<size_t>(r) * width + c) * 3;
  }
  void set(int r, int c, const std::array<uint8_t, 3>& rgb) {
    auto* p = px(r, c);
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }
  bool operator==(const Image8& other) const = default;
};

using Rgb8 = std::array<uint8_t, 3>;

// Boolean grid (top-down visibility masks).
struct BitGrid {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> cells;  // 0 or 1, row-major

  BitGrid() = default;
  BitGrid(int h, int w) : height(h), width(w), cells(static_cast<size_t>(h) * w, 0) {}

  bool get(int r, int c) const { return cells[static_cast<size_t>(r) * width + c] != 0; }
  void set(int r, int c, bool v) { cells[static_cast<size_t>(r) * width + c] = v ? 1 : 0; }
  int64_t count() const {
    int64_t n = 0;
    for (uint8_t v : cells) n += v;
    return n;
  }
  // True if every set cell of this grid is also set in other.
  bool subset_of(const BitGrid& other) const {
    for (size_t i = 0; i < cells.size(); ++i)
      if (cells[i] && !other.cells[i]) return false;
    return true;
  }
  void or_with(const BitGrid& other) {
    for (size_t i = 0; i < cells.size(); ++i) cells[i] = cells[i] | other.cells[i];
  }
  bool operator==(const BitGrid& other) const = default;
};

// CHW float tensor in [0,1].
Tensor image_to_chw(const Image8& img);
// Writes into dst (pointing at a (3,H,W) block); dst must hold 3*H*W floats.
void image_to_chw_into(const Image8& img, float* dst);
// Clamps to [0,1] and quantizes.
Image8 chw_to_image(const Tensor& chw);

}  // namespace topdown
