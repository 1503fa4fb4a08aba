#include "cemb/graph.hpp"

#include <string>

#include "cemb/errors.hpp"

namespace cemb {

Var Graph::leaf(Tensor value) {
  bool rg = value.requires_grad();
  return leaf(std::move(value), rg);
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  if (value.empty()) throw UsageError("Graph::leaf: empty tensor");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.is_leaf = true;
  n.op = "leaf";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::record(Tensor value, std::vector<int> parents, BackwardFn backward, const char* op) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.op = op;
  for (int p : n.parents) {
    if (p < 0 || p >= static_cast<int>(nodes_.size()))
      throw UsageError(std::string("Graph::record: bad parent id in op ") + op);
    if (nodes_[static_cast<size_t>(p)].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Tensor& Graph::grad(int node) const {
  const Node& n = nodes_[static_cast<size_t>(node)];
  if (n.grad.empty())
    throw UsageError("Graph::grad: no gradient recorded for this node; run backward() first");
  return n.grad;
}

Tensor Graph::grad_or_zero(const Var& v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id())];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

void Graph::accumulate(int node, const Tensor& contribution) {
  Node& n = nodes_[static_cast<size_t>(node)];
  if (!n.requires_grad) return;
  if (!contribution.same_shape(n.value))
    throw ShapeError(std::string("Graph::accumulate: gradient shape ") + contribution.shape_str() +
                     " does not match value shape " + n.value.shape_str() + " (op " + n.op + ")");
  if (n.grad.empty())
    n.grad = contribution;
  else
    n.grad.flat() += contribution.flat();
}

std::map<int, Tensor> Graph::backward(const Var& loss) {
  if (loss.graph() != this) throw UsageError("Graph::backward: loss belongs to another graph");
  if (loss.value().numel() != 1)
    throw UsageError("Graph::backward: loss must be scalar, got shape " +
                     loss.value().shape_str());
  for (Node& n : nodes_) n.grad = Tensor();
  nodes_[static_cast<size_t>(loss.id())].grad = Tensor::ones(loss.value().shape());

  // Reverse tape walk: each node is visited exactly once, after every node
  // that consumes it.
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
  }

  std::map<int, Tensor> grads;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (!n.is_leaf || !n.requires_grad) continue;
    grads.emplace(static_cast<int>(i), n.grad.empty() ? Tensor::zeros(n.value.shape()) : n.grad);
  }
  return grads;
}

}  // namespace cemb
