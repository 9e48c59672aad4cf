#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "tmd/autodiff.hpp"
#include "tmd/kernel.hpp"
#include "tmd/layer.hpp"
#include "tmd/params.hpp"
#include "tmd/rng.hpp"

namespace tmd {

struct ClassifierConfig {
  std::size_t input_dim = 2;
  std::size_t hidden = 32;
  std::size_t classes = 2;
  std::size_t blocks = 1;
  bool with_tmd = true;
  std::size_t latent_dim = kDefaultLatentDim;
  Bandwidth epsilon = Bandwidth::median();
  double delta_t_init = 0.0;
  bool freeze_delta_t = false;
};

/// input -> relu(linear) -> residual blocks h + relu(linear(h)) -> linear
/// logits. With `with_tmd`, every residual block is wrapped as a TMD layer
/// whose generator is estimated over the rows of the minibatch.
class MlpClassifier {
 public:
  MlpClassifier(const ClassifierConfig& config, const CounterRng& rng);

  const ClassifierConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::set<std::string> frozen() const;

  /// Logits for all rows of `x`, with one generator over all of them.
  NodeId forward(Graph& g, const BoundParams& bound, NodeId x, bool use_tmd) const;

  /// Evaluation-time logits: rows are split into consecutive groups of
  /// `m_infer`, each group building its own generator.
  Tensor logits(const Tensor& x, bool use_tmd, std::size_t m_infer) const;

  TmdLayerParams layer_settings(std::size_t block) const;

 private:
  ClassifierConfig config_;
  ParamStore params_;
};

std::string block_prefix(std::size_t block);

}  // namespace tmd
