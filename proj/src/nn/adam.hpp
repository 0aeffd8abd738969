#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "core/autograd.hpp"

namespace topdown {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.0f;
  float beta2 = 0.99f;
  float epsilon = 1e-8f;
};

// Per-parameter Adam. Parameters added after construction (progressive
// growing) pick up fresh moment state on their first update.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  void step(const std::vector<Var>& params);
  void zero_grads(const std::vector<Var>& params) const;

  struct State {
    Tensor m;
    Tensor v;
    int64_t t = 0;
  };
  // Exposed for checkpointing.
  std::unordered_map<std::string, State>& states() { return states_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(float lr) { config_.lr = lr; }

 private:
  AdamConfig config_;
  std::unordered_map<std::string, State> states_;
};

}  // namespace topdown
