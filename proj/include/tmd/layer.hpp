#pragma once

#include <functional>
#include <string>

#include "tmd/autodiff.hpp"
#include "tmd/kernel.hpp"
#include "tmd/operator.hpp"
#include "tmd/params.hpp"
#include "tmd/rng.hpp"

namespace tmd {

/// Which rows the kernel is built from: the layer input X or the layer
/// output f(X).
enum class KernelSource { input_features, output_features };

/// Differentiable map recorded on a graph; must return one row per input row.
using LayerFunction = std::function<NodeId(Graph&, NodeId)>;

/// Trainable state of one TMD layer: projection, density head and the step
/// size delta_t, plus the fixed bandwidth policy.
struct TmdLayerParams {
  KernelConfig kernel;
  DensityHead density_head;
  double delta_t = 0.0;
  bool freeze_delta_t = false;
  KernelSource kernel_source = KernelSource::input_features;

  /// Projection drawn N(0, 1/source_dim), linear zero density head,
  /// delta_t = 0.
  static TmdLayerParams init(std::size_t source_dim, std::size_t latent_dim, CounterRng& rng);

  /// Writes the tensors under `prefix.projection`, `prefix.head.*`,
  /// `prefix.delta_t`.
  void store(ParamStore& out, const std::string& prefix) const;
  /// Replaces the tensors from a store written by `store()`.
  void load(const ParamStore& in, const std::string& prefix);
};

struct TmdLayerNodes {
  NodeId projection;
  DensityHeadNodes head;
  NodeId delta_t;
};

/// Registers the layer tensors on `g` (delta_t as a constant if frozen).
TmdLayerNodes bind_layer(Graph& g, const TmdLayerParams& params, bool trainable = true);

/// Looks the layer tensors up in parameters already bound with bind_params().
TmdLayerNodes layer_nodes(const BoundParams& bound, const std::string& prefix);

struct TmdForward {
  NodeId output;
  NodeId layer_output;  // f(X)
  NodeId generator;  // L_m
  double epsilon;
};

/// f(X) + delta_t L_m f(X) with L_m built over the rows of X (or f(X)).
/// RowCountMismatch if f changes the number of rows.
TmdForward tmd_forward(Graph& g, const LayerFunction& f, NodeId x, const TmdLayerNodes& nodes,
                       const TmdLayerParams& params);

Tensor tmd_forward(const LayerFunction& f, const Tensor& x, const TmdLayerParams& params);

/// Turns a node-update function into a layer whose generator is estimated
/// over all nodes it is applied to.
LayerFunction wrap_node_update(LayerFunction f, TmdLayerNodes nodes, TmdLayerParams params);

}  // namespace tmd
