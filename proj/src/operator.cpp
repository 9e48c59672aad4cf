#include "tmd/operator.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tmd/errors.hpp"
#include "tmd/format.hpp"

namespace tmd {

namespace {

void require_positive(const Tensor& v, const char* what) {
  for (double x : v.data()) {
    if (!(x > 0.0)) throw DegenerateNormalization(std::string(what) + " must be strictly positive");
  }
}

}  // namespace

DensityHead DensityHead::linear(std::size_t input_dim) {
  return DensityHead{Tensor::zeros({input_dim, 1}), Tensor::zeros({1, 1}), std::nullopt, std::nullopt};
}

DensityHead DensityHead::mlp(std::size_t input_dim, std::size_t hidden, CounterRng& rng) {
  std::vector<double> w1(input_dim * hidden);
  const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
  for (double& v : w1) v = rng.normal(0.0, s1);
  return DensityHead{Tensor::matrix(input_dim, hidden, std::move(w1)), Tensor::zeros({1, hidden}),
                     Tensor::zeros({hidden, 1}), Tensor::zeros({1, 1})};
}

DensityHeadNodes bind_density_head(Graph& g, const DensityHead& head, bool trainable) {
  auto source = [&](const Tensor& t) { return trainable ? g.parameter(t) : g.constant(t); };
  DensityHeadNodes nodes{source(head.w1), source(head.b1), std::nullopt, std::nullopt};
  if (head.is_mlp()) {
    nodes.w2 = source(*head.w2);
    nodes.b2 = source(*head.b2);
  }
  return nodes;
}

NodeId target_density(Graph& g, NodeId batch, const DensityHeadNodes& head) {
  const std::size_t m = g.value(batch).rows();
  const NodeId ones = g.constant(Tensor::filled({m, 1}, 1.0));
  NodeId z = g.add(g.matmul(batch, head.w1), g.matmul(ones, head.b1));
  if (head.w2) {
    z = g.add(g.matmul(g.relu(z), *head.w2), g.matmul(ones, *head.b2));
  }
  // max(softplus(z), floor) written as floor + relu(softplus(z) - floor).
  const NodeId floor = g.constant(Tensor::filled({m, 1}, kDensityFloor));
  const NodeId positive = g.add(floor, g.relu(g.sub(g.softplus(z), floor)));
  return g.row_sum(positive);
}

Tensor target_density(const Tensor& batch, const DensityHead& head) {
  Graph g;
  const NodeId x = g.constant(batch);
  return g.value(target_density(g, x, bind_density_head(g, head, false)));
}

TmdOperatorNodes build_tmd_operator(Graph& g, NodeId kernel, NodeId q, NodeId pi_sqrt, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidBandwidth("epsilon must be positive and finite, got " + std::to_string(epsilon));
  }
  const Tensor& k = g.value(kernel);
  if (!k.is_matrix() || k.rows() != k.cols()) {
    throw ShapeMismatch("kernel must be square, got " + shape_string(k.shape()));
  }
  const std::size_t m = k.rows();
  if (g.value(q).shape() != Tensor::Shape{m} || g.value(pi_sqrt).shape() != Tensor::Shape{m}) {
    throw ShapeMismatch("q and pi_sqrt must be vectors of length " + std::to_string(m));
  }
  require_positive(g.value(q), "kernel density estimate q");
  require_positive(g.value(pi_sqrt), "target density pi^{1/2}");

  TmdOperatorNodes nodes{};
  nodes.density_ratio = g.hadamard(pi_sqrt, g.reciprocal(q));
  nodes.weighted_kernel = g.diag_right_scale(kernel, nodes.density_ratio);
  nodes.row_norm = g.row_sum(nodes.weighted_kernel);
  for (double v : g.value(nodes.row_norm).data()) {
    if (!(v > 0.0)) {
      throw DegenerateNormalization("row normalizer underflowed to zero; pi^{1/2} spans too many orders of magnitude");
    }
  }
  const NodeId stochastic = g.diag_left_scale(g.reciprocal(nodes.row_norm), nodes.weighted_kernel);
  const NodeId identity = g.constant(Tensor::identity(m));
  nodes.generator = g.scale(1.0 / epsilon, g.sub(stochastic, identity));
  return nodes;
}

TmdOperatorParts build_tmd_operator(const Tensor& kernel, const Tensor& q, const Tensor& pi_sqrt, double epsilon) {
  Graph g;
  const auto nodes = build_tmd_operator(g, g.constant(kernel), g.constant(q), g.constant(pi_sqrt), epsilon);
  return TmdOperatorParts{g.value(nodes.density_ratio), g.value(nodes.weighted_kernel), g.value(nodes.row_norm),
                          TmdOperator{g.value(nodes.generator), epsilon}};
}

NodeId apply_generator(Graph& g, NodeId generator, NodeId values) {
  const Tensor& l = g.value(generator);
  const Tensor& f = g.value(values);
  if (!f.is_matrix() || f.rows() != l.cols()) {
    throw ShapeMismatch("generator of size " + std::to_string(l.cols()) + " applied to values of shape " +
                        shape_string(f.shape()));
  }
  return g.matmul(generator, values);
}

Tensor apply_generator(const TmdOperator& op, const Tensor& values) {
  Graph g;
  return g.value(apply_generator(g, g.constant(op.L), g.constant(values)));
}

void write_operator(std::ostream& out, const TmdOperator& op) {
  const std::size_t m = op.size();
  out << "m " << m << '\n' << "epsilon " << fmt17(op.epsilon) << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j) out << ' ';
      out << fmt17(op.L.at(i, j));
    }
    out << '\n';
  }
}

TmdOperator read_operator(std::istream& in) {
  std::string tag;
  std::size_t m = 0;
  double epsilon = 0.0;
  if (!(in >> tag >> m) || tag != "m") throw FormatError("operator dump: expected 'm <size>'");
  if (!(in >> tag >> epsilon) || tag != "epsilon") throw FormatError("operator dump: expected 'epsilon <value>'");
  std::vector<double> values(m * m);
  for (double& v : values) {
    if (!(in >> v)) throw FormatError("operator dump: truncated matrix");
  }
  return TmdOperator{Tensor::matrix(m, m, std::move(values)), epsilon};
}

}  // namespace tmd
