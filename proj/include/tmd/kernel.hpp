#pragma once

#include <cstddef>

#include "tmd/autodiff.hpp"
#include "tmd/tensor.hpp"

namespace tmd {

/// m x N matrix of samples, one point per row. m >= 1, N >= 1.
class PointBatch {
 public:
  explicit PointBatch(Tensor values);

  const Tensor& values() const noexcept { return values_; }
  std::size_t size() const { return values_.rows(); }
  std::size_t dim() const { return values_.cols(); }

 private:
  Tensor values_;
};

/// Kernel bandwidth policy. `median` picks epsilon from the current latent
/// points (median nonzero squared distance / 4); `fixed` uses the value given.
class Bandwidth {
 public:
  static Bandwidth median() { return Bandwidth(true, 0.0); }
  static Bandwidth fixed(double epsilon);

  bool is_median() const noexcept { return median_; }
  double value() const noexcept { return value_; }
  double resolve(const Tensor& latent) const;

 private:
  Bandwidth(bool median, double value) : median_(median), value_(value) {}
  bool median_;
  double value_;
};

inline constexpr std::size_t kDefaultLatentDim = 16;

struct KernelConfig {
  Bandwidth epsilon = Bandwidth::median();
  /// N x h linear map applied before the kernel; no bias.
  Tensor projection;

  std::size_t latent_dim() const { return projection.cols(); }
  std::size_t input_dim() const { return projection.rows(); }
};

/// Median of the nonzero pairwise squared distances divided by 4. Returns 1
/// when every pair coincides (or m == 1).
double median_bandwidth(const Tensor& latent);

/// latent = X * projection.
NodeId project(Graph& g, NodeId batch, NodeId projection);

/// K_ij = exp(-|x_i - x_j|^2 / (4 epsilon)). InvalidBandwidth if epsilon <= 0.
NodeId gaussian_kernel(Graph& g, NodeId latent, double epsilon);

/// q_i = sum_j K_ij.
NodeId kde(Graph& g, NodeId kernel);

// Value-level conveniences over a throwaway graph.
Tensor gaussian_kernel(const Tensor& latent, double epsilon);
Tensor kde(const Tensor& kernel);

}  // namespace tmd
