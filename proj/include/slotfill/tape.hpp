#pragma once

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "slotfill/tensor.hpp"

namespace slotfill {

struct Parameter;

/// Handle into a Tape. Only valid for the tape that produced it.
struct NodeRef {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation tape. Every op records its inputs and a
/// backward closure; nodes are created in topological order, so backward()
/// is a single reverse sweep. One tape per forward pass; tapes are cheap
/// and not reused across examples.
class Tape {
 public:
  /// Leaf with no gradient flow (inputs, frozen embeddings).
  NodeRef constant(Tensor v);

  /// Leaf tied to a trainable parameter. Repeated calls with the same
  /// parameter return the same node, so gradients accumulate additively.
  NodeRef param(Parameter& p);

  // y = x W + b, with x[d], W[d x n], b[n]
  NodeRef affine(NodeRef x, NodeRef W, NodeRef b);
  // y = W x, with W[m x n], x[n]
  NodeRef matvec(NodeRef W, NodeRef x);

  NodeRef add(NodeRef a, NodeRef b);         // elementwise, same shape
  NodeRef mul(NodeRef a, NodeRef b);         // elementwise, same shape
  NodeRef scale(NodeRef x, double c);
  NodeRef sigmoid(NodeRef x);
  NodeRef tanh_(NodeRef x);
  NodeRef slice(NodeRef x, std::size_t offset, std::size_t len);
  NodeRef concat(NodeRef a, NodeRef b);
  NodeRef mean(NodeRef x);                   // scalar

  struct SoftmaxResult {
    NodeRef loss;   // scalar node, -log p[gold]
    Tensor probs;   // forward probabilities, not on the tape
  };
  /// Numerically stabilized softmax cross-entropy against a gold index.
  SoftmaxResult softmax_xent(NodeRef logits, std::size_t gold);

  const Tensor& value(NodeRef r) const;
  const Tensor& grad(NodeRef r) const;

  /// Reverse sweep from a scalar loss node. Node gradients are then
  /// available via grad(); parameter contributions via the visitors below.
  void backward(NodeRef loss);

  /// Visit (parameter, gradient tensor) for every parameter leaf touched by
  /// this tape, in first-use order. Only valid after backward().
  void for_each_param_grad(const std::function<void(Parameter&, const Tensor&)>& fn) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::function<void(Tape&)> backward;  // empty for leaves
    Parameter* param = nullptr;
  };

  NodeRef push(Tensor value, std::function<void(Tape&)> backward = {});
  Tensor& grad_buf(int id);
  const Tensor& val(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  std::vector<int> param_order_;
  bool backward_done_ = false;
};

/// Softmax of a plain tensor (inference paths, no tape).
Tensor softmax(const Tensor& logits);

}  // namespace slotfill
