#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>

#include "tmd/autodiff.hpp"
#include "tmd/rng.hpp"
#include "tmd/tensor.hpp"

namespace tmd {

/// Lower bound on the learned square-root density.
inline constexpr double kDensityFloor = 1e-6;

/// Learnable g with pi^{1/2}(x) = max(softplus(g_raw(x)), kDensityFloor).
///
/// g_raw is either linear (x w + b) or a one-hidden-layer ReLU MLP.
struct DensityHead {
  Tensor w1;  // N x 1 (linear) or N x H (mlp)
  Tensor b1;  // 1 x 1 or 1 x H
  std::optional<Tensor> w2;  // H x 1
  std::optional<Tensor> b2;  // 1 x 1

  /// Zero weights, giving pi^{1/2} = ln 2 everywhere.
  static DensityHead linear(std::size_t input_dim);
  static DensityHead mlp(std::size_t input_dim, std::size_t hidden, CounterRng& rng);

  bool is_mlp() const noexcept { return w2.has_value(); }
  std::size_t input_dim() const { return w1.rows(); }
};

struct DensityHeadNodes {
  NodeId w1, b1;
  std::optional<NodeId> w2, b2;
};

DensityHeadNodes bind_density_head(Graph& g, const DensityHead& head, bool trainable);

/// pi^{1/2} for every row of `batch`, as a vector of m strictly positive values.
NodeId target_density(Graph& g, NodeId batch, const DensityHeadNodes& head);
Tensor target_density(const Tensor& batch, const DensityHead& head);

/// Dense generator estimate with its bandwidth.
struct TmdOperator {
  Tensor L;
  double epsilon = 1.0;

  std::size_t size() const { return L.rows(); }
};

/// Graph ids of every intermediate of the construction.
struct TmdOperatorNodes {
  NodeId density_ratio;  // diag of D_{eps,pi}: pi^{1/2} / q
  NodeId weighted_kernel;  // K_{eps,pi} = K D_{eps,pi}
  NodeId row_norm;  // diag of D~: row sums of K_{eps,pi}
  NodeId generator;  // L = (D~^{-1} K_{eps,pi} - I) / eps
};

/// Builds L from the kernel matrix, its row-sum density estimate q and the
/// target pi^{1/2}. Throws DegenerateNormalization when a row normalizer
/// underflows to zero.
TmdOperatorNodes build_tmd_operator(Graph& g, NodeId kernel, NodeId q, NodeId pi_sqrt, double epsilon);

struct TmdOperatorParts {
  Tensor density_ratio;
  Tensor weighted_kernel;
  Tensor row_norm;
  TmdOperator op;
};

TmdOperatorParts build_tmd_operator(const Tensor& kernel, const Tensor& q, const Tensor& pi_sqrt, double epsilon);

/// L F, one output row per point.
NodeId apply_generator(Graph& g, NodeId generator, NodeId values);
Tensor apply_generator(const TmdOperator& op, const Tensor& values);

/// Text dump: "m <m>", "epsilon <eps>", then one line per row of L, all
/// numbers with 17 significant digits.
void write_operator(std::ostream& out, const TmdOperator& op);
TmdOperator read_operator(std::istream& in);

}  // namespace tmd
