#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace topdown {

struct VarNode;
using Var = std::shared_ptr<VarNode>;

// Backward function of one op: given the gradient flowing into the node's
// output, produce gradients for each parent (nullptr for parents that do not
// need one). Implementations build their results out of the public ops, so
// running them with grad mode enabled yields a differentiable gradient graph
// (this is what the WGAN-GP double backward relies on).
using BackwardFn =
    std::function<std::vector<Var>(const Var& grad_out, const std::vector<Var>& parents)>;

struct VarNode {
  Tensor value;
  // Leaf that accumulates gradients (parameters, penalty inputs).
  bool requires_grad = false;
  // True if this node or any ancestor requires grad; ops skip recording when
  // nothing upstream wants gradients.
  bool needs_grad = false;
  std::vector<Var> parents;
  BackwardFn backward;
  // Gradient accumulator for leaves, filled by backward(). Plain tensor, so
  // storing it never creates reference cycles through the graph.
  Tensor grad_acc;
  uint64_t seq = 0;
  std::string name;

  const Shape& shape() const { return value.shape(); }
};

// Leaf with requires_grad (parameters / differentiated inputs).
Var make_param(Tensor value, std::string name = "");
// Leaf without gradient tracking.
Var make_const(Tensor value);
Var detach(const Var& v);

// Thread-local flag: when off, ops compute values but record no graph.
bool grad_enabled();
class GradMode {
 public:
  explicit GradMode(bool enable);
  ~GradMode();

 private:
  bool saved_;
};
struct NoGrad : GradMode {
  NoGrad() : GradMode(false) {}
};

// Internal: ops call this to register a node.
Var make_op_node(Tensor value, std::vector<Var> parents, BackwardFn backward);

// Reverse-mode sweep from a scalar root; accumulates into requires_grad
// leaves' grad_acc. Builds no graph.
void backward(const Var& root);

// Functional gradient: d(output)/d(inputs). `output` must be scalar.
// With create_graph the returned gradients are themselves differentiable.
// Inputs that do not influence the output get zero gradients.
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph);

void zero_grad(const Var& v);

}  // namespace topdown
