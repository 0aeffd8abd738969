#include "core/tensor.hpp"

#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace topdown {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  size_ = shape_numel(shape_);
  check_shape(size_ >= 0, "negative tensor size");
  buf_ = std::make_shared<std::vector<float>>(static_cast<size_t>(size_), 0.0f);
}

Tensor Tensor::full(Shape shape, float value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data) {
  check_shape(shape_numel(shape) == static_cast<int64_t>(data.size()),
              "from_data: size mismatch");
  Tensor t;
  t.shape_ = std::move(shape);
  t.size_ = static_cast<int64_t>(data.size());
  t.buf_ = std::make_shared<std::vector<float>>(std::move(data));
  return t;
}

Tensor Tensor::reshaped(Shape new_shape) const {
  check_shape(shape_numel(new_shape) == size_,
              "reshape: " + shape_to_string(shape_) + " -> " + shape_to_string(new_shape));
  Tensor t;
  t.buf_ = buf_;
  t.shape_ = std::move(new_shape);
  t.size_ = size_;
  return t;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.size_ = size_;
  t.buf_ = std::make_shared<std::vector<float>>(*buf_);
  return t;
}

void Tensor::fill(float value) {
  for (auto& v : *buf_) v = value;
}

bool Tensor::all_finite() const {
  for (float v : *buf_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

float Tensor::item() const {
  check_shape(size_ == 1, "item() on tensor of size " + std::to_string(size_));
  return (*buf_)[0];
}

}  // namespace topdown
