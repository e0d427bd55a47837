// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/autograd.hpp"

#include <unordered_set>

namespace vmrnn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
void backward(const Var<T>& root, const Tensor<T>& seed) {
  if (!root.requires_grad()) return;
  Node<T>* r = root.node();
  if (seed.empty()) {
    if (r->value.numel() != 1) throw ConfigError("backward without seed needs a scalar root");
    r->grad_ref()[0] += T(1);
  } else {
    if (seed.shape() != r->value.shape()) throw ConfigError("backward seed shape mismatch");
    auto& g = r->grad_ref();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += seed[i];
  }

  // Iterative post-order DFS; reversed it is a valid topological order.
  // Owning references keep interior nodes alive while parents are released.
  std::vector<std::shared_ptr<Node<T>>> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<std::shared_ptr<Node<T>>, std::size_t>> stack{{root.node_ptr(), 0}};
  visited.insert(r);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      std::shared_ptr<Node<T>> p = node->parents[next++];
      if (p && p->requires_grad && !p->parents.empty() && visited.insert(p.get()).second)
        stack.push_back({std::move(p), 0});
    } else {
      order.push_back(std::move(node));
      stack.pop_back();
    }
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = it->get();
    if (n->backward && !n->grad.empty()) n->backward(*n);
    n->backward = nullptr;
    n->parents.clear();
    if (n != r) n->grad = Tensor<T>();
  }
}

template void backward<float>(const Var<float>&, const Tensor<float>&);
template void backward<double>(const Var<double>&, const Tensor<double>&);

}  // namespace vmrnn
