#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tmd/rng.hpp"
#include "tmd/tensor.hpp"

namespace tmd::testing {

inline Tensor random_tensor(CounterRng& rng, Tensor::Shape shape, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

/// Agreement rule used across the gradient checks: absolute 1e-6 near zero,
/// otherwise relative 1e-4.
inline bool grad_close(double a, double b, double rel = 1e-4, double abs = 1e-6) {
  const double diff = std::abs(a - b);
  if (diff <= abs) return true;
  return diff / std::max(std::abs(a), std::abs(b)) <= rel;
}

/// Worst relative error between two gradients, with entries within the
/// absolute tolerance counted as zero error.
inline double worst_grad_error(const Tensor& a, const Tensor& b, double abs = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    if (diff <= abs) continue;
    worst = std::max(worst, diff / std::max(std::abs(a[i]), std::abs(b[i])));
  }
  return worst;
}

/// Textbook triple loop, independent of the engine's matmul.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  std::vector<double> out(a.rows() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      out[i * b.cols() + j] = s;
    }
  }
  return Tensor::matrix(a.rows(), b.cols(), std::move(out));
}

}  // namespace tmd::testing
