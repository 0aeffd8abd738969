#pragma once

#include <vector>

#include "core/ops.hpp"

namespace topdown {

// Scalar squash, v = (|s|^2 / (1 + |s|^2)) * s / |s|, with the zero guard
// (returns 0 when |s| < 1e-12). The graph version is ops::squash.
std::vector<float> squash_vector(const std::vector<float>& s);

// Dynamic routing over prediction vectors.
//   u_hat: (N, children, parents, D, P)  P = spatial positions (1 when dense)
// Logits start at zero and are shared across positions; agreement updates
// average the u_hat . v dot products over P. Returns (N, parents, D, P).
// When couplings_out is given, the coupling tensor (N, children, parents)
// of every iteration is appended, in order.
Var dynamic_routing(const Var& u_hat, int iterations,
                    std::vector<Tensor>* couplings_out = nullptr);

}  // namespace topdown
