#include "tmd/classifier.hpp"

#include <algorithm>

#include "tmd/errors.hpp"
#include "tmd/nn.hpp"

namespace tmd {

std::string block_prefix(std::size_t block) { return "block" + std::to_string(block); }

MlpClassifier::MlpClassifier(const ClassifierConfig& config, const CounterRng& rng) : config_(config) {
  if (config_.hidden == 0 || config_.classes < 2 || config_.input_dim == 0) {
    throw ConfigError("classifier", "needs positive sizes and at least two classes");
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

std::set<std::string> MlpClassifier::frozen() const {
  std::set<std::string> out;
  if (config_.with_tmd && config_.freeze_delta_t) {
    for (std::size_t b = 0; b < config_.blocks; ++b) out.insert(block_prefix(b) + ".tmd.delta_t");
  }
  return out;
}

TmdLayerParams MlpClassifier::layer_settings(std::size_t block) const {
  TmdLayerParams layer;
  layer.kernel.epsilon = config_.epsilon;
  layer.freeze_delta_t = config_.freeze_delta_t;
  layer.load(params_, block_prefix(block) + ".tmd");
  return layer;
}

NodeId MlpClassifier::forward(Graph& g, const BoundParams& bound, NodeId x, bool use_tmd) const {
  if (use_tmd && !config_.with_tmd) throw ConfigError("use_tmd", "model was built without TMD layers");
  NodeId h = g.relu(linear(g, x, bound.at("embed.w"), bound.at("embed.b")));
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    const std::string p = block_prefix(b);
    const NodeId w = bound.at(p + ".w");
    const NodeId bias = bound.at(p + ".b");
    LayerFunction block = [w, bias](Graph& gr, NodeId in) { return gr.add(in, gr.relu(linear(gr, in, w, bias))); };
    if (use_tmd) {
      TmdLayerParams settings;
      settings.kernel.epsilon = config_.epsilon;
      h = tmd_forward(g, block, h, layer_nodes(bound, p + ".tmd"), settings).output;
    } else {
      h = block(g, h);
    }
  }
  return linear(g, h, bound.at("head.w"), bound.at("head.b"));
}

Tensor MlpClassifier::logits(const Tensor& x, bool use_tmd, std::size_t m_infer) const {
  if (m_infer == 0) throw ConfigError("m_infer", "must be at least 1");
  const std::size_t n = x.rows();
  std::vector<double> out;
  out.reserve(n * config_.classes);
  for (std::size_t start = 0; start < n; start += m_infer) {
    std::vector<std::size_t> rows;
    for (std::size_t i = start; i < std::min(n, start + m_infer); ++i) rows.push_back(i);
    Graph g;
    const BoundParams bound = bind_params(g, params_, {});
    const Tensor z = g.value(forward(g, bound, g.constant(take_rows(x, rows)), use_tmd));
    out.insert(out.end(), z.data().begin(), z.data().end());
  }
  return Tensor::matrix(n, config_.classes, std::move(out));
}

}  // namespace tmd
