#include "nn/adam.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace topdown {

void Adam::step(const std::vector<Var>& params) {
  for (const Var& p : params) {
    if (!p->grad_acc.defined()) continue;  // parameter untouched this pass
    check_shape(!p->name.empty(), "Adam requires named parameters");
    State& st = states_[p->name];
    if (!st.m.defined()) {
      st.m = Tensor::zeros(p->value.shape());
      st.v = Tensor::zeros(p->value.shape());
      st.t = 0;
    }
    st.t += 1;
    const float b1 = config_.beta1, b2 = config_.beta2;
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(st.t));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(st.t));
    float* w = p->value.data();
    const float* g = p->grad_acc.data();
    float* m = st.m.data();
    float* v = st.v.data();
    const int64_t n = p->value.size();
    for (int64_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      float mhat = m[i] / bc1;
      float vhat = v[i] / bc2;
      w[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

void Adam::zero_grads(const std::vector<Var>& params) const {
  for (const Var& p : params) zero_grad(p);
}

}  // namespace topdown
