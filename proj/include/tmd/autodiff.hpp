#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "tmd/tensor.hpp"

namespace tmd {

using NodeId = std::size_t;

/// The closed set of recorded operations. `leaf` and `constant` are the two
/// source kinds; everything else has exactly one vector-Jacobian rule in
/// backward().
///
/// Argument conventions:
///   scalar_mul        (s, x)   s has one element
///   diag_left_scale   (v, A)   diag(v) * A, v has rows(A) entries
///   diag_right_scale  (A, v)   A * diag(v), v has cols(A) entries
///   row_sum           (A)      m x n -> vector of m
///   pairwise_sq_dist  (X)      m x n -> m x m, D_ij = |x_i - x_j|^2
///   mean, sum         (x)      -> scalar
enum class OpKind {
  leaf,
  constant,
  add,
  sub,
  hadamard,
  scalar_mul,
  matmul,
  exp,
  neg,
  reciprocal,
  row_sum,
  diag_left_scale,
  diag_right_scale,
  pairwise_sq_dist,
  relu,
  softplus,
  mean,
  sum,
  square,
};

std::string_view op_name(OpKind op);

struct Node {
  OpKind op;
  std::vector<NodeId> inputs;
  Tensor value;
};

/// Append-only record of a computation. Inputs of a node always carry smaller
/// ids than the node itself, so the id order is a topological order.
class Graph {
 public:
  /// A trainable leaf; backward() reports a gradient for it.
  NodeId parameter(Tensor value);
  /// A non-trainable source value.
  NodeId constant(Tensor value);

  NodeId record(OpKind op, std::span<const NodeId> inputs);
  NodeId record(OpKind op, std::initializer_list<NodeId> inputs) {
    return record(op, std::span<const NodeId>(inputs.begin(), inputs.size()));
  }

  NodeId add(NodeId a, NodeId b) { return record(OpKind::add, {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return record(OpKind::sub, {a, b}); }
  NodeId hadamard(NodeId a, NodeId b) { return record(OpKind::hadamard, {a, b}); }
  NodeId scalar_mul(NodeId s, NodeId x) { return record(OpKind::scalar_mul, {s, x}); }
  NodeId scale(double s, NodeId x) { return scalar_mul(constant(Tensor::scalar(s)), x); }
  NodeId matmul(NodeId a, NodeId b) { return record(OpKind::matmul, {a, b}); }
  NodeId exp(NodeId x) { return record(OpKind::exp, {x}); }
  NodeId neg(NodeId x) { return record(OpKind::neg, {x}); }
  NodeId reciprocal(NodeId x) { return record(OpKind::reciprocal, {x}); }
  NodeId row_sum(NodeId x) { return record(OpKind::row_sum, {x}); }
  NodeId diag_left_scale(NodeId v, NodeId a) { return record(OpKind::diag_left_scale, {v, a}); }
  NodeId diag_right_scale(NodeId a, NodeId v) { return record(OpKind::diag_right_scale, {a, v}); }
  NodeId pairwise_sq_dist(NodeId x) { return record(OpKind::pairwise_sq_dist, {x}); }
  NodeId relu(NodeId x) { return record(OpKind::relu, {x}); }
  NodeId softplus(NodeId x) { return record(OpKind::softplus, {x}); }
  NodeId mean(NodeId x) { return record(OpKind::mean, {x}); }
  NodeId sum(NodeId x) { return record(OpKind::sum, {x}); }
  NodeId square(NodeId x) { return record(OpKind::square, {x}); }

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool is_parameter(NodeId id) const { return nodes_.at(id).op == OpKind::leaf; }
  std::vector<NodeId> parameters() const;

 private:
  NodeId push(OpKind op, std::vector<NodeId> inputs, Tensor value);
  std::vector<Node> nodes_;
};

/// Evaluates one op on concrete values. Exposed so tests can check the
/// forward rule independently of graph bookkeeping.
Tensor evaluate(OpKind op, std::span<const Tensor* const> inputs);

struct Gradients {
  /// dLoss/dLeaf for every parameter node in the graph (zeros if unused).
  std::map<NodeId, Tensor> by_leaf;
  /// Number of nodes the reverse sweep processed.
  std::size_t nodes_visited = 0;

  const Tensor& operator[](NodeId id) const { return by_leaf.at(id); }
};

/// Reverse-mode sweep from a one-element loss node. Throws NonScalarLoss
/// otherwise.
Gradients backward(const Graph& graph, NodeId loss);

/// Central-difference gradient (f(p + h e_i) - f(p - h e_i)) / 2h for every
/// coordinate of `param`. A non-positive step is std::invalid_argument; a
/// non-finite evaluation of f is NonFiniteResult.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& param, double step);

}  // namespace tmd
