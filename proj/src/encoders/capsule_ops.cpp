#include "encoders/capsule_ops.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace topdown {

std::vector<float> squash_vector(const std::vector<float>& s) {
  double n2 = 0.0;
  for (float v : s) n2 += static_cast<double>(v) * v;
  double n = std::sqrt(n2);
  std::vector<float> out(s.size(), 0.0f);
  if (n < 1e-12) return out;
  double scale = (n2 / (1.0 + n2)) / n;
  for (size_t i = 0; i < s.size(); ++i) out[i] = static_cast<float>(s[i] * scale);
  return out;
}

Var dynamic_routing(const Var& u_hat, int iterations, std::vector<Tensor>* couplings_out) {
  const Shape& s = u_hat->value.shape();
  check_shape(s.size() == 5, "dynamic_routing: u_hat must be (N,children,parents,D,P)");
  const int64_t N = s[0], CH = s[1], PA = s[2], D = s[3], P = s[4];
  if (PA < 1) throw ConfigError("dynamic_routing: empty parent set");
  if (iterations < 1) throw ConfigError("dynamic_routing: iterations must be >= 1");

  Var b = make_const(Tensor::zeros({N, CH, PA, 1, 1}));
  Var v;
  for (int r = 0; r < iterations; ++r) {
    Var c = ops::softmax(b, 2);
    if (couplings_out) couplings_out->push_back(c->value.reshaped({N, CH, PA}).clone());
    Var sum = ops::reduce_sum(ops::mul(c, u_hat), {1}, /*keepdims=*/true);  // (N,1,PA,D,P)
    v = ops::squash(sum, 3);
    if (r + 1 < iterations) {
      Var agree = ops::reduce_sum(ops::mul(u_hat, v), {3}, /*keepdims=*/true);  // (N,CH,PA,1,P)
      agree = ops::reduce_mean(agree, {4}, /*keepdims=*/true);                  // shared over P
      b = ops::add(b, agree);
    }
  }
  return ops::reshape(v, {N, PA, D, P});
}

}  // namespace topdown
