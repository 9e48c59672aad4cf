#include "tmd/layer.hpp"

#include <cmath>
#include <vector>

#include "tmd/errors.hpp"

namespace tmd {

TmdLayerParams TmdLayerParams::init(std::size_t source_dim, std::size_t latent_dim, CounterRng& rng) {
  std::vector<double> proj(source_dim * latent_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(source_dim));
  for (double& v : proj) v = rng.normal(0.0, scale);
  TmdLayerParams p;
  p.kernel.projection = Tensor::matrix(source_dim, latent_dim, std::move(proj));
  p.density_head = DensityHead::linear(latent_dim);
  return p;
}

void TmdLayerParams::store(ParamStore& out, const std::string& prefix) const {
  out.set(prefix + ".projection", kernel.projection);
  out.set(prefix + ".head.w1", density_head.w1);
  out.set(prefix + ".head.b1", density_head.b1);
  if (density_head.is_mlp()) {
    out.set(prefix + ".head.w2", *density_head.w2);
    out.set(prefix + ".head.b2", *density_head.b2);
  }
  out.set(prefix + ".delta_t", Tensor::scalar(delta_t));
}

void TmdLayerParams::load(const ParamStore& in, const std::string& prefix) {
  kernel.projection = in.get(prefix + ".projection");
  density_head.w1 = in.get(prefix + ".head.w1");
  density_head.b1 = in.get(prefix + ".head.b1");
  if (in.contains(prefix + ".head.w2")) {
    density_head.w2 = in.get(prefix + ".head.w2");
    density_head.b2 = in.get(prefix + ".head.b2");
  } else {
    density_head.w2.reset();
    density_head.b2.reset();
  }
  delta_t = in.get(prefix + ".delta_t").item();
}

TmdLayerNodes bind_layer(Graph& g, const TmdLayerParams& params, bool trainable) {
  TmdLayerNodes nodes{};
  nodes.projection = trainable ? g.parameter(params.kernel.projection) : g.constant(params.kernel.projection);
  nodes.head = bind_density_head(g, params.density_head, trainable);
  const Tensor dt = Tensor::scalar(params.delta_t);
  nodes.delta_t = (trainable && !params.freeze_delta_t) ? g.parameter(dt) : g.constant(dt);
  return nodes;
}

TmdLayerNodes layer_nodes(const BoundParams& bound, const std::string& prefix) {
  auto find = [&](const std::string& name) {
    auto it = bound.find(prefix + name);
    if (it == bound.end()) throw UnknownKey("layer parameter '" + prefix + name + "' is not bound");
    return it->second;
  };
  TmdLayerNodes nodes{};
  nodes.projection = find(".projection");
  nodes.head.w1 = find(".head.w1");
  nodes.head.b1 = find(".head.b1");
  if (bound.count(prefix + ".head.w2")) {
    nodes.head.w2 = find(".head.w2");
    nodes.head.b2 = find(".head.b2");
  }
  nodes.delta_t = find(".delta_t");
  return nodes;
}

TmdForward tmd_forward(Graph& g, const LayerFunction& f, NodeId x, const TmdLayerNodes& nodes,
                       const TmdLayerParams& params) {
  const std::size_t m = g.value(x).rows();
  const NodeId fx = f(g, x);
  if (!g.value(fx).is_matrix() || g.value(fx).rows() != m) {
    throw RowCountMismatch("layer function mapped " + std::to_string(m) + " rows to shape " +
                           shape_string(g.value(fx).shape()));
  }
  const NodeId source = params.kernel_source == KernelSource::input_features ? x : fx;
  const NodeId latent = project(g, source, nodes.projection);
  const double epsilon = params.kernel.epsilon.resolve(g.value(latent));
  const NodeId kernel = gaussian_kernel(g, latent, epsilon);
  const NodeId q = kde(g, kernel);
  const NodeId pi_sqrt = target_density(g, latent, nodes.head);
  const auto op = build_tmd_operator(g, kernel, q, pi_sqrt, epsilon);
  const NodeId correction = g.scalar_mul(nodes.delta_t, apply_generator(g, op.generator, fx));
  return TmdForward{g.add(fx, correction), fx, op.generator, epsilon};
}

Tensor tmd_forward(const LayerFunction& f, const Tensor& x, const TmdLayerParams& params) {
  Graph g;
  const NodeId input = g.constant(x);
  const auto nodes = bind_layer(g, params, false);
  return g.value(tmd_forward(g, f, input, nodes, params).output);
}

LayerFunction wrap_node_update(LayerFunction f, TmdLayerNodes nodes, TmdLayerParams params) {
  return [f = std::move(f), nodes, params = std::move(params)](Graph& g, NodeId x) {
    return tmd_forward(g, f, x, nodes, params).output;
  };
}

}  // namespace tmd
