#pragma once

#include <cstddef>
#include <vector>

#include "tmd/autodiff.hpp"
#include "tmd/rng.hpp"
#include "tmd/tensor.hpp"

namespace tmd {

/// x W + 1 b for an m x n input, n x k weight and 1 x k bias.
NodeId linear(Graph& g, NodeId x, NodeId weight, NodeId bias);

/// He-style N(0, 2 / fan_in) weight matrix.
Tensor he_weight(std::size_t fan_in, std::size_t fan_out, CounterRng& rng);

/// Row-wise softmax. The per-row maximum is subtracted as a constant first.
NodeId softmax_rows(Graph& g, NodeId logits);

/// Mean squared error between softmax(logits) and one-hot labels (Brier
/// score scaled by 1/classes).
NodeId brier_loss(Graph& g, NodeId logits, const std::vector<int>& labels);

Tensor one_hot(const std::vector<int>& labels, std::size_t classes);

std::vector<int> argmax_rows(const Tensor& logits);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels);

/// Row subset of a matrix, in the given order.
Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& rows);

/// Column-wise maximum over rows (m x n -> 1 x n), recorded as a pairwise
/// tournament of b + relu(a - b) so it stays inside the op set.
NodeId max_over_rows(Graph& g, NodeId x);

}  // namespace tmd
