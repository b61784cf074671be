#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tempref/numcore/array.hpp"

namespace tempref::numcore {

class Node;
using Var = std::shared_ptr<Node>;

/// One vertex of the computation graph. `backward_fn` reads this node's grad
/// and accumulates into the grads of its parents.
class Node {
 public:
  Node(Array value, bool requires_grad, const char* tag);

  Array value;
  Array grad;  // empty unless requires_grad
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  const char* tag;
  bool requires_grad;

  std::size_t rows() const { return value.rows(); }
  std::size_t cols() const { return value.cols(); }
  void zero_grad() { grad.fill(0.0); }
};

/// Leaf that never receives gradient.
Var constant(Array value);
/// Leaf that accumulates gradient (trainable weight or checked input).
Var leaf(Array value);

/// Interior node; requires_grad is inherited from the parents. `backward_fn`
/// is dropped when no parent needs gradient.
Var make_node(Array value, std::vector<Var> parents, const char* tag,
              std::function<void(Node&)> backward_fn);

/// Seeds root.grad with ones and propagates through the graph in reverse
/// topological order. Gradients accumulate; callers zero them between passes.
void backward(const Var& root);

/// Nodes reachable from root, parents before children.
std::vector<Node*> topological_order(const Var& root);

}  // namespace tempref::numcore
