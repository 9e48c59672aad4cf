#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tmd/layer.hpp"
#include "tmd/tensor.hpp"

namespace tmd {

/// Classical Chan-Vese contour state. phi > 0 marks the foreground.
struct LevelSetState {
  Tensor phi;  // H x W
  Tensor image;  // H x W in [0, 1]
  double mu = 0.2;  // length
  double nu = 0.0;  // area
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double eta = 1.0;  // Heaviside width
  double step = 1.0;  // contour step, not the TMD delta_t
  std::optional<double> c1;  // last foreground mean
  std::optional<double> c2;

  /// Checks matching finite grids, eta > 0 and step > 0.
  void validate() const;
};

double smoothed_heaviside(double z, double eta);
double smoothed_delta(double z, double eta);

/// div(grad phi / |grad phi|) by central differences, replicated borders,
/// |grad phi| floored at 1e-8.
Tensor curvature(const Tensor& phi);

struct RegionMeans {
  double c1;
  double c2;
};

/// H-weighted means of the image inside and outside the contour. A region
/// whose weight underflows keeps the previous mean; DegenerateRegion if there
/// is none.
RegionMeans region_means(const LevelSetState& state);

/// d phi / dt.
Tensor chanvese_velocity(const LevelSetState& state, const RegionMeans& means);

/// One explicit step; the returned state carries the new phi and the means
/// used for it.
LevelSetState chanvese_step(const LevelSetState& state);

/// Average pooling of an H x W grid to out x out (H, W multiples of out).
Tensor avg_pool(const Tensor& grid, std::size_t out);

inline constexpr std::size_t kPooledSide = 16;

/// Per-state chanvese_step followed by the TMD correction over the batch,
/// with the kernel built on the projected 16 x 16 pooled phi fields.
std::vector<LevelSetState> chanvese_tmd_step(const std::vector<LevelSetState>& states, const TmdLayerParams& params);

/// Default layer for level-set batches: a 256 -> latent projection.
TmdLayerParams levelset_layer(double delta_t, std::size_t latent_dim, CounterRng& rng);

/// Signed distance to a centered circle of radius min(H, W) / 4.
Tensor initial_phi(std::size_t rows, std::size_t cols);

Tensor foreground_mask(const Tensor& phi);

/// Intersection over union of two 0/1 masks; 1 when both are empty.
double iou(const Tensor& a, const Tensor& b);

/// Binary 8-bit PGM (P5), 255 for mask values > 0.5.
void write_pgm(std::ostream& out, const Tensor& mask);

}  // namespace tmd
