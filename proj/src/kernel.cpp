#include "tmd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tmd/errors.hpp"

namespace tmd {

PointBatch::PointBatch(Tensor values) : values_(std::move(values)) {
  if (!values_.is_matrix() || values_.rows() == 0 || values_.cols() == 0) {
    throw ShapeMismatch("point batch must be a non-empty m x N matrix, got " + shape_string(values_.shape()));
  }
}

Bandwidth Bandwidth::fixed(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidBandwidth("epsilon must be positive and finite, got " + std::to_string(epsilon));
  }
  return Bandwidth(false, epsilon);
}

double Bandwidth::resolve(const Tensor& latent) const { return median_ ? median_bandwidth(latent) : value_; }

double median_bandwidth(const Tensor& latent) {
  const Tensor d = evaluate(OpKind::pairwise_sq_dist, std::vector<const Tensor*>{&latent});
  const std::size_t m = d.rows();
  std::vector<double> values;
  values.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (d.at(i, j) > 0.0) values.push_back(d.at(i, j));
    }
  }
  if (values.empty()) return 1.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double med = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    med = 0.5 * (lower + med);
  }
  return med / 4.0;
}

NodeId project(Graph& g, NodeId batch, NodeId projection) {
  if (g.value(batch).is_matrix() && g.value(projection).is_matrix() &&
      g.value(batch).cols() != g.value(projection).rows()) {
    throw ShapeMismatch("projection expects " + std::to_string(g.value(projection).rows()) +
                        " input features, batch has " + std::to_string(g.value(batch).cols()));
  }
  return g.matmul(batch, projection);
}

NodeId gaussian_kernel(Graph& g, NodeId latent, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidBandwidth("epsilon must be positive and finite, got " + std::to_string(epsilon));
  }
  const NodeId d = g.pairwise_sq_dist(latent);
  return g.exp(g.scale(-1.0 / (4.0 * epsilon), d));
}

NodeId kde(Graph& g, NodeId kernel) { return g.row_sum(kernel); }

Tensor gaussian_kernel(const Tensor& latent, double epsilon) {
  Graph g;
  return g.value(gaussian_kernel(g, g.constant(latent), epsilon));
}

Tensor kde(const Tensor& kernel) {
  Graph g;
  return g.value(kde(g, g.constant(kernel)));
}

}  // namespace tmd
