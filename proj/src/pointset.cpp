#include "tmd/pointset.hpp"

#include "tmd/classifier.hpp"
#include "tmd/errors.hpp"
#include "tmd/layer.hpp"
#include "tmd/nn.hpp"

namespace tmd {

PointSetNet::PointSetNet(const PointSetConfig& config, const CounterRng& rng) : config_(config) {
  if (config_.hidden == 0 || config_.classes < 2 || config_.input_dim == 0) {
    throw ConfigError("pointset", "needs positive sizes and at least two classes");
  }
  const std::size_t h = config_.hidden;
  CounterRng embed_rng = rng.fork("embed");
  params_.set("embed.w", he_weight(config_.input_dim, h, embed_rng));
  params_.set("embed.b", Tensor::zeros({1, h}));
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    const std::string p = block_prefix(b);
    CounterRng block_rng = rng.fork(p);
    params_.set(p + ".w", he_weight(h, h, block_rng));
    params_.set(p + ".b", Tensor::zeros({1, h}));
    if (config_.with_tmd) {
      CounterRng tmd_rng = rng.fork(p + ".tmd");
      TmdLayerParams layer = TmdLayerParams::init(h, config_.latent_dim, tmd_rng);
      layer.delta_t = config_.delta_t_init;
      layer.store(params_, p + ".tmd");
    }
  }
  CounterRng head_rng = rng.fork("head");
  params_.set("head.w", he_weight(h, config_.classes, head_rng));
  params_.set("head.b", Tensor::zeros({1, config_.classes}));
}

std::set<std::string> PointSetNet::frozen() const {
  std::set<std::string> out;
  if (config_.with_tmd && config_.freeze_delta_t) {
    for (std::size_t b = 0; b < config_.blocks; ++b) out.insert(block_prefix(b) + ".tmd.delta_t");
  }
  return out;
}

NodeId PointSetNet::forward(Graph& g, const BoundParams& bound, NodeId cloud, bool use_tmd) const {
  if (use_tmd && !config_.with_tmd) throw ConfigError("use_tmd", "model was built without TMD layers");
  NodeId f = g.relu(linear(g, cloud, bound.at("embed.w"), bound.at("embed.b")));
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    const std::string p = block_prefix(b);
    const NodeId w = bound.at(p + ".w");
    const NodeId bias = bound.at(p + ".b");
    LayerFunction ff = [w, bias](Graph& gr, NodeId in) { return gr.relu(linear(gr, in, w, bias)); };
    if (use_tmd) {
      TmdLayerParams settings;
      settings.kernel.epsilon = config_.epsilon;
      f = tmd_forward(g, ff, f, layer_nodes(bound, p + ".tmd"), settings).output;
    } else {
      f = ff(g, f);
    }
  }
  return linear(g, max_over_rows(g, f), bound.at("head.w"), bound.at("head.b"));
}

NodeId PointSetNet::forward_batch(Graph& g, const BoundParams& bound, const std::vector<Tensor>& clouds,
                                  bool use_tmd) const {
  if (clouds.empty()) throw ShapeMismatch("forward_batch needs at least one cloud");
  const std::size_t n = clouds.size();
  NodeId out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    const NodeId row = g.matmul(g.constant(Tensor::matrix(n, 1, std::move(e))),
                                forward(g, bound, g.constant(clouds[i]), use_tmd));
    out = i == 0 ? row : g.add(out, row);
  }
  return out;
}

Tensor PointSetNet::logits(const Tensor& cloud, bool use_tmd) const {
  Graph g;
  const BoundParams bound = bind_params(g, params_, {});
  return g.value(forward(g, bound, g.constant(cloud), use_tmd));
}

}  // namespace tmd
