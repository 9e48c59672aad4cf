#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "tmd/autodiff.hpp"
#include "tmd/kernel.hpp"
#include "tmd/params.hpp"
#include "tmd/rng.hpp"

namespace tmd {

struct PointSetConfig {
  std::size_t input_dim = 2;
  std::size_t hidden = 32;
  std::size_t classes = 3;
  std::size_t blocks = 1;
  bool with_tmd = true;
  std::size_t latent_dim = kDefaultLatentDim;
  Bandwidth epsilon = Bandwidth::median();
  double delta_t_init = 0.0;
  bool freeze_delta_t = false;
};

/// Per-point embedding, blocks of FF(F) + dt L_m FF(F) with FF = relu(linear)
/// and L_m built over the points of one cloud, max over points, linear head.
class PointSetNet {
 public:
  PointSetNet(const PointSetConfig& config, const CounterRng& rng);

  const PointSetConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::set<std::string> frozen() const;

  /// 1 x classes logits for one n x input_dim cloud.
  NodeId forward(Graph& g, const BoundParams& bound, NodeId cloud, bool use_tmd) const;

  /// Stacks per-cloud logits into a clouds x classes matrix.
  NodeId forward_batch(Graph& g, const BoundParams& bound, const std::vector<Tensor>& clouds, bool use_tmd) const;

  Tensor logits(const Tensor& cloud, bool use_tmd) const;

 private:
  PointSetConfig config_;
  ParamStore params_;
};

}  // namespace tmd
