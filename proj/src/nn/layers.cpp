#include "nn/layers.hpp"

#include "core/errors.hpp"

namespace topdown {

float equalized_scale(int64_t fan_in, float gain) {
  if (fan_in < 1) throw ConfigError("equalized_scale: fan_in must be >= 1");
  return gain / std::sqrt(static_cast<float>(fan_in));
}

Var ParamStore::create(const std::string& name, Shape shape, Rng& init, float stddev) {
  Tensor t(shape);
  float* p = t.data();
  for (int64_t i = 0; i < t.size(); ++i) p[i] = init.normal_f() * stddev;
  Var v = make_param(std::move(t), name);
  params_.push_back(v);
  return v;
}

Var ParamStore::create_zeros(const std::string& name, Shape shape) {
  Var v = make_param(Tensor(std::move(shape)), name);
  params_.push_back(v);
  return v;
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p;
  return nullptr;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grads() const {
  for (const auto& p : params_) zero_grad(p);
}

EqConv2d::EqConv2d(ParamStore& store, const std::string& name, int64_t in_ch, int64_t out_ch,
                   int64_t kernel, int64_t stride, int64_t pad, Rng& init, float gain)
    : in_ch_(in_ch) {
  weight_ = store.create(name + ".w", {out_ch, in_ch, kernel, kernel}, init, 1.0f);
  bias_ = store.create_zeros(name + ".b", {out_ch});
  spec_ = ops::Conv2dSpec{stride, stride, pad, pad};
  scale_ = equalized_scale(in_ch * kernel * kernel, gain);
}

Var EqConv2d::forward(const Var& x) const {
  Var w = ops::mul_scalar(weight_, scale_);
  Var y = ops::conv2d(x, w, spec_);
  Var b = ops::reshape(bias_, {1, bias_->value.dim(0), 1, 1});
  return ops::add(y, b);
}

EqConv3d::EqConv3d(ParamStore& store, const std::string& name, int64_t in_ch, int64_t out_ch,
                   const Shape& kernel_dhw, const ops::Conv3dSpec& spec, Rng& init, float gain)
    : spec_(spec) {
  check_shape(kernel_dhw.size() == 3, "EqConv3d: kernel must be (kd,kh,kw)");
  weight_ = store.create(name + ".w",
                         {out_ch, in_ch, kernel_dhw[0], kernel_dhw[1], kernel_dhw[2]}, init, 1.0f);
  bias_ = store.create_zeros(name + ".b", {out_ch});
  scale_ = equalized_scale(in_ch * kernel_dhw[0] * kernel_dhw[1] * kernel_dhw[2], gain);
}

Var EqConv3d::forward(const Var& x) const {
  Var w = ops::mul_scalar(weight_, scale_);
  Var y = ops::conv3d(x, w, spec_);
  Var b = ops::reshape(bias_, {1, bias_->value.dim(0), 1, 1, 1});
  return ops::add(y, b);
}

EqLinear::EqLinear(ParamStore& store, const std::string& name, int64_t in_dim, int64_t out_dim,
                   Rng& init, float gain) {
  weight_ = store.create(name + ".w", {in_dim, out_dim}, init, 1.0f);
  bias_ = store.create_zeros(name + ".b", {out_dim});
  scale_ = equalized_scale(in_dim, gain);
}

Var EqLinear::forward(const Var& x) const {
  Var w = ops::mul_scalar(weight_, scale_);
  Var y = ops::matmul(x, w);
  Var b = ops::reshape(bias_, {1, bias_->value.dim(0)});
  return ops::add(y, b);
}

}  // namespace topdown
