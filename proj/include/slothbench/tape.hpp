#pragma once

#include <functional>
#include <vector>

#include "slothbench/tensor.hpp"

namespace sloth {

// Reverse-mode tape over dense float tensors. A tape records one forward
// computation; backward() replays it once in reverse. Tapes are confined to a
// single thread and discarded after use.
class Tape {
 public:
  using NodeId = int;

  NodeId leaf(Tensor value, bool requires_grad = true);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, float c);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId softmax_rows(NodeId a);  // softmax over the last axis, per row
  NodeId log(NodeId a);           // log(x + 1e-12)
  NodeId mean_all(NodeId a);      // scalar mean over all entries
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId transpose(NodeId a);
  NodeId gather_rows(NodeId table, const std::vector<int>& ids);
  NodeId select(NodeId a, int row, int col);  // scalar a[row, col]

  const Tensor& value(NodeId id) const { return nodes_[id].value; }

  // Accumulates d(scalar_output)/d(node) for every node. scalar_output must
  // have shape [1].
  void backward(NodeId scalar_output);

  // Valid after backward(); zero tensor for nodes the output does not reach.
  const Tensor& grad(NodeId id) const { return grads_[id]; }

  std::size_t num_nodes() const { return nodes_.size(); }
  bool is_leaf(NodeId id) const;

 private:
  enum class Op {
    Leaf,
    MatMul,
    Add,
    Sub,
    Mul,
    Scale,
    Tanh,
    Sigmoid,
    SoftmaxRows,
    Log,
    MeanAll,
    ConcatCols,
    ConcatRows,
    Transpose,
    GatherRows,
    Select,
  };

  struct Node {
    Op op;
    std::vector<NodeId> inputs;
    std::vector<int> iaux;
    float faux = 0.f;
    Tensor value;
    bool requires_grad = false;
  };

  NodeId push(Node node);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

constexpr float kLogEpsilon = 1e-12f;

}  // namespace sloth
