#include "tempref/numcore/graph.hpp"

#include <unordered_set>
#include <utility>

namespace tempref::numcore {

Node::Node(Array v, bool rg, const char* t)
    : value(std::move(v)), grad(rg ? Array(value.shape(), 0.0) : Array()), tag(t), requires_grad(rg) {}

Var constant(Array value) { return std::make_shared<Node>(std::move(value), false, "constant"); }

Var leaf(Array value) { return std::make_shared<Node>(std::move(value), true, "leaf"); }

Var make_node(Array value, std::vector<Var> parents, const char* tag,
              std::function<void(Node&)> backward_fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  auto node = std::make_shared<Node>(std::move(value), rg, tag);
  if (rg) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return node;
}

std::vector<Node*> topological_order(const Var& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS; recurrent graphs get deep.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Var& root) {
  if (!root->requires_grad) return;
  root->grad.fill(1.0);
  const auto order = topological_order(root);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace tempref::numcore
