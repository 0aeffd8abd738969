#include "core/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_map>

#include "core/errors.hpp"

namespace topdown {

namespace {

std::atomic<uint64_t> g_seq{1};
thread_local bool g_grad_enabled = true;

uint64_t next_seq() { return g_seq.fetch_add(1, std::memory_order_relaxed); }

}  // namespace

Var make_param(Tensor value, std::string name) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->needs_grad = true;
  node->seq = next_seq();
  node->name = std::move(name);
  return node;
}

Var make_const(Tensor value) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  node->seq = next_seq();
  return node;
}

Var detach(const Var& v) { return make_const(v->value); }

bool grad_enabled() { return g_grad_enabled; }

GradMode::GradMode(bool enable) : saved_(g_grad_enabled) { g_grad_enabled = enable; }
GradMode::~GradMode() { g_grad_enabled = saved_; }

Var make_op_node(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  node->seq = next_seq();
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) {
      if (p && p->needs_grad) {
        any = true;
        break;
      }
    }
    if (any) {
      node->needs_grad = true;
      node->parents = std::move(parents);
      node->backward = std::move(backward);
    }
  }
  return node;
}

namespace {

Var add_values(const Var& a, const Var& b);  // forward decl, defined via ops

// Collect every node reachable from root through parents that needs a grad,
// then process in descending seq order; ops always have larger seq than
// their parents, so this is a valid reverse topological order.
std::vector<VarNode*> collect_reachable(const Var& root, std::unordered_map<VarNode*, Var>& keep) {
  std::vector<VarNode*> order;
  std::vector<VarNode*> stack;
  std::unordered_map<VarNode*, bool> seen;
  stack.push_back(root.get());
  keep[root.get()] = root;
  seen[root.get()] = true;
  while (!stack.empty()) {
    VarNode* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p && p->needs_grad && !seen[p.get()]) {
        seen[p.get()] = true;
        keep[p.get()] = p;
        stack.push_back(p.get());
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](VarNode* a, VarNode* b) { return a->seq > b->seq; });
  return order;
}

void run_backward(const Var& root, bool create_graph,
                  std::unordered_map<VarNode*, Var>& grads, bool into_leaf_acc,
                  const std::vector<Var>& preserve) {
  check_shape(root->value.size() == 1, "backward: root must be scalar, got " +
                                           shape_to_string(root->value.shape()));
  std::unordered_map<VarNode*, Var> keep;
  auto order = collect_reachable(root, keep);
  grads[root.get()] = make_const(Tensor::full(root->value.shape(), 1.0f));
  GradMode mode(create_graph);
  for (VarNode* n : order) {
    auto git = grads.find(n);
    if (git == grads.end()) continue;
    const Var gout = git->second;
    if (n->backward) {
      auto pgrads = n->backward(gout, n->parents);
      check_shape(pgrads.size() == n->parents.size(), "backward fn arity mismatch");
      for (size_t i = 0; i < pgrads.size(); ++i) {
        const Var& p = n->parents[i];
        if (!p || !p->needs_grad || !pgrads[i]) continue;
        check_shape(pgrads[i]->value.shape() == p->value.shape(),
                    "backward: grad shape mismatch for parent");
        auto it = grads.find(p.get());
        if (it == grads.end()) {
          grads[p.get()] = pgrads[i];
        } else {
          it->second = add_values(it->second, pgrads[i]);
        }
      }
    }
    if (n->requires_grad && into_leaf_acc) {
      if (!n->grad_acc.defined()) n->grad_acc = Tensor::zeros(n->value.shape());
      const Tensor& g = gout->value;
      float* acc = n->grad_acc.data();
      const float* src = g.data();
      for (int64_t i = 0; i < g.size(); ++i) acc[i] += src[i];
    }
    // Drop grads for interior nodes as soon as they are consumed; callers
    // only read grads of leaves or explicitly preserved nodes.
    bool preserved = false;
    for (const auto& pv : preserve) {
      if (pv.get() == n) {
        preserved = true;
        break;
      }
    }
    if (!n->requires_grad && !preserved) grads.erase(n);
  }
}

}  // namespace

void backward(const Var& root) {
  std::unordered_map<VarNode*, Var> grads;
  run_backward(root, /*create_graph=*/false, grads, /*into_leaf_acc=*/true, {});
}

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph) {
  std::unordered_map<VarNode*, Var> grads;
  run_backward(output, create_graph, grads, /*into_leaf_acc=*/false, inputs);
  std::vector<Var> result;
  result.reserve(inputs.size());
  for (const auto& in : inputs) {
    auto it = grads.find(in.get());
    if (it != grads.end()) {
      result.push_back(it->second);
    } else {
      result.push_back(make_const(Tensor::zeros(in->value.shape())));
    }
  }
  return result;
}

void zero_grad(const Var& v) {
  if (v->grad_acc.defined()) v->grad_acc.fill(0.0f);
}

namespace {

// Local elementwise add used for gradient accumulation. Mirrors ops::add but
// lives here to keep autograd.cpp self-contained; records a node when grad
// mode is on so accumulated gradients stay differentiable.
Var add_values(const Var& a, const Var& b) {
  check_shape(a->value.shape() == b->value.shape(), "grad accumulate: shape mismatch");
  Tensor out(a->value.shape());
  const float* pa = a->value.data();
  const float* pb = b->value.data();
  float* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = pa[i] + pb[i];
  return make_op_node(std::move(out), {a, b},
                      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
                        return {g, g};
                      });
}

}  // namespace

}  // namespace topdown
