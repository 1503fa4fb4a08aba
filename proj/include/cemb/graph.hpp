#pragma once

#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "cemb/tensor.hpp"

namespace cemb {

class Graph;

// Handle to a node on a Graph tape. Cheap to copy; valid only while its
// Graph is alive.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Tensor& grad() const;
  const std::vector<int>& shape() const { return value().shape(); }
  int id() const { return node_; }
  bool requires_grad() const;
  Graph* graph() const { return g_; }
  explicit operator bool() const { return g_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, int node) : g_(g), node_(node) {}
  Graph* g_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape. Ops append nodes in evaluation order, so the record is
// already a topological order; backward() walks it once in reverse,
// accumulating gradient contributions into parents. One Graph per training
// step; leaves carry the parameters for that step.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  // Records a leaf. Without the explicit flag, the tensor's own
  // requires_grad decides whether backward() reports a gradient for it.
  Var leaf(Tensor value);
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Used by op implementations. `backward` receives the node's output
  // gradient and must accumulate() into the parents it cares about.
  Var record(Tensor value, std::vector<int> parents, BackwardFn backward, const char* op);

  // Gradients of a scalar loss for every requires_grad leaf, keyed by leaf
  // id. Grads are reset on entry, so repeated calls on the same graph are
  // bit-identical. Leaves the loss never touched get zero gradients.
  std::map<int, Tensor> backward(const Var& loss);

  const Tensor& value(int node) const { return nodes_[static_cast<size_t>(node)].value; }
  const Tensor& grad(int node) const;
  Tensor grad_or_zero(const Var& v) const;
  bool requires_grad(int node) const { return nodes_[static_cast<size_t>(node)].requires_grad; }

  // Adds a contribution to a node's gradient; no-op for nodes that do not
  // require gradients.
  void accumulate(int node, const Tensor& contribution);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until backward touches this node
    std::vector<int> parents;
    BackwardFn backward;
    const char* op = "";
    bool requires_grad = false;
    bool is_leaf = false;
  };

  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return g_->value(node_); }
inline const Tensor& Var::grad() const { return g_->grad(node_); }
inline bool Var::requires_grad() const { return g_->requires_grad(node_); }

}  // namespace cemb
