#include "tmd/nn.hpp"

#include <algorithm>
#include <cmath>

#include "tmd/errors.hpp"

namespace tmd {

NodeId linear(Graph& g, NodeId x, NodeId weight, NodeId bias) {
  const std::size_t m = g.value(x).rows();
  const NodeId ones = g.constant(Tensor::filled({m, 1}, 1.0));
  return g.add(g.matmul(x, weight), g.matmul(ones, bias));
}

Tensor he_weight(std::size_t fan_in, std::size_t fan_out, CounterRng& rng) {
  std::vector<double> w(fan_in * fan_out);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : w) v = rng.normal(0.0, sd);
  return Tensor::matrix(fan_in, fan_out, std::move(w));
}

NodeId softmax_rows(Graph& g, NodeId logits) {
  const Tensor& z = g.value(logits);
  const std::size_t m = z.rows(), k = z.cols();
  std::vector<double> top(m);
  for (std::size_t i = 0; i < m; ++i) {
    top[i] = z.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) top[i] = std::max(top[i], z.at(i, j));
  }
  const NodeId shift = g.matmul(g.constant(Tensor::matrix(m, 1, top)), g.constant(Tensor::filled({1, k}, 1.0)));
  const NodeId e = g.exp(g.sub(logits, shift));
  return g.diag_left_scale(g.reciprocal(g.row_sum(e)), e);
}

Tensor one_hot(const std::vector<int>& labels, std::size_t classes) {
  std::vector<double> y(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw ShapeMismatch("label " + std::to_string(labels[i]) + " outside " + std::to_string(classes) + " classes");
    }
    y[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Tensor::matrix(labels.size(), classes, std::move(y));
}

NodeId brier_loss(Graph& g, NodeId logits, const std::vector<int>& labels) {
  const Tensor& z = g.value(logits);
  if (z.rows() != labels.size()) throw ShapeMismatch("one label per logit row required");
  const NodeId p = softmax_rows(g, logits);
  return g.mean(g.square(g.sub(p, g.constant(one_hot(labels, z.cols())))));
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j) {
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size() || labels.empty()) throw ShapeMismatch("accuracy needs matching nonempty sets");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * x.cols());
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < x.cols(); ++c) out.push_back(x.at(r, c));
  }
  return Tensor::matrix(rows.size(), x.cols(), std::move(out));
}

namespace {

Tensor selector(std::size_t out_rows, std::size_t in_rows, std::size_t offset) {
  // Row i picks input row min(2i + offset, in_rows - 1).
  std::vector<double> s(out_rows * in_rows, 0.0);
  for (std::size_t i = 0; i < out_rows; ++i) s[i * in_rows + std::min(2 * i + offset, in_rows - 1)] = 1.0;
  return Tensor::matrix(out_rows, in_rows, std::move(s));
}

}  // namespace

NodeId max_over_rows(Graph& g, NodeId x) {
  NodeId cur = x;
  while (g.value(cur).rows() > 1) {
    const std::size_t r = g.value(cur).rows();
    const std::size_t half = (r + 1) / 2;
    const NodeId a = g.matmul(g.constant(selector(half, r, 0)), cur);
    const NodeId b = g.matmul(g.constant(selector(half, r, 1)), cur);
    cur = g.add(b, g.relu(g.sub(a, b)));
  }
  return cur;
}

}  // namespace tmd
