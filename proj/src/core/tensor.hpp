#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace topdown {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense float32 tensor, always contiguous row-major. Buffers are shared
// between views (reshape) and treated as immutable once they participate in
// an autograd graph; mutation is reserved for construction and optimizer
// updates on parameters.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, float value);
  static Tensor from_data(Shape shape, std::vector<float> data);
  static Tensor scalar(float value) { return full({1}, value); }

  bool defined() const { return buf_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return size_; }

  float* data() { return buf_->data(); }
  const float* data() const { return buf_->data(); }
  float& at(int64_t i) { return (*buf_)[static_cast<size_t>(i)]; }
  float at(int64_t i) const { return (*buf_)[static_cast<size_t>(i)]; }

  // Shares the underlying buffer.
  Tensor reshaped(Shape new_shape) const;
  Tensor clone() const;

  void fill(float value);
  bool all_finite() const;
  float item() const;  // requires size() == 1

 private:
  std::shared_ptr<std::vector<float>> buf_;
  Shape shape_;
  int64_t size_ = 0;
};

}  // namespace topdown
